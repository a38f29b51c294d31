mod common;

use auralis_core::fixtures::{duet, kitchen, SceneScript, ScriptedObject};
use auralis_core::geometry::{CameraIntrinsics, Vec3};
use auralis_core::ingest::{
    associate_tracks, bind_stems, build_default_project, default_intrinsics, default_project, parse_bundle, AnnotatedFrame,
    AnnotationBundle, AudioTag, BindingTarget, DepthRange, Detection, IngestError, StemEntry, SynonymTable, TrackSkeleton,
};
use auralis_core::scene::{save_project, LayoutId, VideoMeta};
use common::best_assignment;
use proptest::prelude::*;

const TWO_FRAMES: &str = include_str!("fixtures/two_frames.bundle.json");

fn det(label: &str, bbox: [f64; 4], depth: f64) -> Detection {
    Detection { label: label.into(), bbox, depth }
}

/// Pinhole backprojection written out longhand for a 60 degree lens.
fn expected_point(u: f64, v: f64, d: f64, w: f64, h: f64) -> Vec3 {
    let f = (w / 2.0) / (30f64.to_radians()).tan();
    Vec3::new((u - w / 2.0) * d / f, -(v - h / 2.0) * d / f, -d)
}

#[test]
fn two_frame_bundle_parses_to_hand_built_value() {
    let parsed = parse_bundle(TWO_FRAMES.as_bytes()).unwrap();
    let expected = AnnotationBundle {
        video: VideoMeta { width: 1280, height: 720, fps: 25.0, duration: 1.0 },
        depth_range: DepthRange { near: 1.0, far: 5.0 },
        frames: vec![
            AnnotatedFrame {
                t: 0.0,
                detections: vec![det("dog", [100.0, 300.0, 200.0, 400.0], 0.25), det("guitar", [900.0, 200.0, 1100.0, 500.0], 0.5)],
            },
            AnnotatedFrame {
                t: 0.5,
                detections: vec![det("guitar", [920.0, 200.0, 1120.0, 500.0], 0.5), det("dog", [140.0, 300.0, 240.0, 400.0], 0.0)],
            },
        ],
        stems: vec![
            StemEntry { id: "bark".into(), path: "stems/bark.wav".into(), tags: vec![AudioTag { label: "Bark".into(), confidence: 0.8 }] },
            StemEntry {
                id: "strum".into(),
                path: "stems/strum.wav".into(),
                tags: vec![AudioTag { label: "speech".into(), confidence: 0.1 }, AudioTag { label: "guitar".into(), confidence: 0.7 }],
            },
        ],
    };
    assert_eq!(parsed, expected);
}

#[test]
fn two_frame_bundle_default_project() {
    let b = parse_bundle(TWO_FRAMES.as_bytes()).unwrap();
    let k = default_intrinsics(&b);
    let p = default_project(&b, &k, LayoutId::Stereo, &SynonymTable::builtin()).unwrap();
    let ids: Vec<(&str, &str)> = p.tracks.iter().map(|t| (t.id.as_str(), t.label.as_str())).collect();
    assert_eq!(ids, [("bark", "dog"), ("strum", "guitar")]);
    let want = [
        [(0.0, expected_point(150.0, 350.0, 2.0, 1280.0, 720.0)), (0.5, expected_point(190.0, 350.0, 1.0, 1280.0, 720.0))],
        [(0.0, expected_point(1000.0, 350.0, 3.0, 1280.0, 720.0)), (0.5, expected_point(1020.0, 350.0, 3.0, 1280.0, 720.0))],
    ];
    for (track, want) in p.tracks.iter().zip(want) {
        assert!(track.user_keyframes.is_empty());
        for (k, (t, pos)) in track.model_keyframes.iter().zip(want) {
            assert_eq!(k.t, t);
            assert!((k.p - pos).norm() < 1e-9, "{:?} vs {pos:?}", k.p);
        }
    }
}

#[test]
fn bundle_errors_carry_paths() {
    match parse_bundle(TWO_FRAMES.replace("\"depth\": 0.0", "\"depth\": \"near\"").as_bytes()) {
        Err(IngestError::Schema { path, .. }) => assert_eq!(path, "frames[1].detections[1].depth"),
        other => panic!("{other:?}"),
    }
    match parse_bundle(TWO_FRAMES.replace("\"t\": 0.5", "\"t\": -0.5").as_bytes()) {
        Err(IngestError::Invariant(v)) => assert!(!v.is_empty()),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_bundle(b"{ not json"), Err(IngestError::Parse(_))));
}

/// Two people walking towards each other without meeting; detection order
/// in each frame is shuffled by `flip`.
fn two_people(steps: &[(f64, f64)], flip: &[bool]) -> (AnnotationBundle, Vec<[(f64, f64); 2]>) {
    let mut truth = Vec::new();
    let mut a = (300.0, 500.0);
    let mut b = (1600.0, 540.0);
    let mut frames = Vec::new();
    for (i, (&(da, db), &swap)) in steps.iter().zip(flip).enumerate() {
        let boxes = |c: (f64, f64)| det("person", [c.0 - 40.0, c.1 - 90.0, c.0 + 40.0, c.1 + 90.0], 0.3);
        let mut detections = vec![boxes(a), boxes(b)];
        if swap {
            detections.reverse();
        }
        frames.push(AnnotatedFrame { t: i as f64 * 0.25, detections });
        truth.push([a, b]);
        a.0 += da;
        b.0 -= db;
    }
    let bundle = AnnotationBundle {
        video: VideoMeta { width: 1920, height: 1080, fps: 30.0, duration: steps.len() as f64 * 0.25 },
        frames,
        stems: Vec::new(),
        depth_range: DepthRange::default(),
    };
    (bundle, truth)
}

fn pixel_of(k: &CameraIntrinsics, p: Vec3) -> (f64, f64) {
    k.project(p).unwrap()
}

proptest! {
    #[test]
    fn same_label_tracks_never_swap(
        steps in prop::collection::vec((0.0f64..60.0, 0.0f64..60.0), 2..12),
        flip in prop::collection::vec(any::<bool>(), 12),
    ) {
        let (bundle, truth) = two_people(&steps, &flip);
        let k = default_intrinsics(&bundle);
        let tracks = associate_tracks(&bundle, &k).unwrap();
        prop_assert_eq!(tracks.len(), 2);
        // frame 0 opens tracks in detection order
        let first = if flip[0] { [1, 0] } else { [0, 1] };
        for (f, people) in truth.iter().enumerate().skip(1) {
            let previous: Vec<(f64, f64)> = (0..2).map(|ti| pixel_of(&k, tracks[ti].model_keyframes[f - 1].p)).collect();
            let now: Vec<(f64, f64)> = bundle.frames[f].detections.iter().map(|d| d.center()).collect();
            let oracle = best_assignment(&previous, &now);
            for ti in 0..2 {
                let got = pixel_of(&k, tracks[ti].model_keyframes[f].p);
                let want = now[oracle[ti]];
                prop_assert!((got.0 - want.0).abs() < 1e-6 && (got.1 - want.1).abs() < 1e-6);
                let person = people[first[ti]];
                prop_assert!((got.0 - person.0).abs() < 1e-6, "track {} swapped at frame {}", ti, f);
            }
        }
    }

    #[test]
    fn binding_is_a_function(
        labels in prop::collection::vec(prop::sample::select(vec!["dog", "person", "violin", "car", "sink"]), 0..6),
        tags in prop::collection::vec(
            prop::collection::vec((prop::sample::select(vec!["bark", "speech", "fiddle", "wind", "dog", "water tap", "engine"]), 0u8..10), 0..3),
            0..6,
        ),
    ) {
        let synonyms = SynonymTable::builtin();
        let tracks: Vec<TrackSkeleton> = labels.iter().map(|l| TrackSkeleton::new(*l, Vec::new())).collect();
        let stems: Vec<StemEntry> = tags
            .iter()
            .enumerate()
            .map(|(i, t)| StemEntry {
                id: format!("s{i}"),
                path: format!("s{i}.wav"),
                tags: t.iter().map(|(l, c)| AudioTag { label: (*l).into(), confidence: f64::from(*c) / 10.0 }).collect(),
            })
            .collect();
        let bindings = bind_stems(&tracks, &stems, &synonyms);
        prop_assert_eq!(bindings.len(), stems.len());
        let mut seen = std::collections::HashSet::new();
        for (stem, b) in stems.iter().zip(&bindings) {
            prop_assert_eq!(&b.stem_id, &stem.id);
            if let BindingTarget::Track { index, label } = &b.target {
                prop_assert!(seen.insert(*index), "track {} bound twice", index);
                prop_assert_eq!(label, &tracks[*index].label);
                let top = stem.top_tag().unwrap();
                prop_assert_eq!(synonyms.normalize(&top.label), synonyms.normalize(label));
            }
        }
        prop_assert_eq!(bind_stems(&tracks, &stems, &synonyms), bindings);
    }
}

#[test]
fn duet_binds_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = duet(2.0);
    let path = fixture.write_to(dir.path(), "duet").unwrap();
    let bundle = parse_bundle(&std::fs::read(&path).unwrap()).unwrap();
    let k = default_intrinsics(&bundle);
    let (project, stems) = build_default_project(&bundle, &k, LayoutId::FiveOne, dir.path()).unwrap();
    let summary: Vec<(&str, &str, bool)> = project.tracks.iter().map(|t| (t.id.as_str(), t.label.as_str(), t.directional)).collect();
    assert_eq!(summary, [("s0-violin", "violin", true), ("s1-flute", "flute", true), ("wind", "wind noise", false)]);
    // violin on the left of frame, flute on the right
    assert!(project.tracks[0].model_keyframes.iter().all(|k| k.p.x < 0.0));
    assert!(project.tracks[1].model_keyframes.iter().all(|k| k.p.x > 0.0));
    assert!(project.tracks[2].model_keyframes.is_empty());
    for t in &project.tracks {
        assert_eq!(stems.get(&t.stem_ref).unwrap().samples.len(), 96_000);
    }
}

#[test]
fn ingest_is_deterministic() {
    let fixture = kitchen(3.0);
    let k = default_intrinsics(&fixture.bundle);
    let first = save_project(&default_project(&fixture.bundle, &k, LayoutId::Quad, &SynonymTable::builtin()).unwrap());
    for _ in 0..100 {
        let again = default_project(&fixture.bundle, &k, LayoutId::Quad, &SynonymTable::builtin()).unwrap();
        assert_eq!(save_project(&again), first);
    }
}

#[test]
fn kitchen_has_four_directional_tracks() {
    let fixture = kitchen(2.0);
    let k = default_intrinsics(&fixture.bundle);
    let p = default_project(&fixture.bundle, &k, LayoutId::FiveOne, &SynonymTable::builtin()).unwrap();
    let labels: Vec<&str> = p.tracks.iter().map(|t| t.label.as_str()).collect();
    assert_eq!(labels, ["person", "knife", "microwave", "sink"]);
    assert!(p.tracks.iter().all(|t| t.directional && t.model_keyframes.len() == 9));
}

#[test]
fn silent_props_get_no_track_and_untagged_stems_are_ambient() {
    let mut fixture = SceneScript::new(1.0)
        .object(ScriptedObject { tag: None, ..ScriptedObject::new("chair", (100.0, 100.0, 0.5), (100.0, 100.0, 0.5), 0.0) })
        .object(ScriptedObject::new("dog", (800.0, 500.0, 0.5), (900.0, 500.0, 0.5), 300.0).tagged("bark"))
        .build();
    fixture.bundle.stems.push(StemEntry { id: "mix".into(), path: "mix.wav".into(), tags: vec![] });
    let k = default_intrinsics(&fixture.bundle);
    let p = default_project(&fixture.bundle, &k, LayoutId::Stereo, &SynonymTable::builtin()).unwrap();
    let summary: Vec<(&str, bool)> = p.tracks.iter().map(|t| (t.label.as_str(), t.directional)).collect();
    assert_eq!(summary, [("dog", true), ("ambient", false)]);
}

#[test]
fn mismatched_stem_rates_are_rejected() {
    use auralis_core::audio_io::{write_clip, AudioClip, BitDepth};
    let dir = tempfile::tempdir().unwrap();
    let fixture = duet(0.5);
    fixture.write_to(dir.path(), "duet").unwrap();
    let odd = AudioClip { sample_rate: 44_100, samples: vec![0.0; 100] };
    std::fs::write(dir.path().join(&fixture.bundle.stems[1].path), write_clip(&odd, BitDepth::Int16)).unwrap();
    let k = default_intrinsics(&fixture.bundle);
    match build_default_project(&fixture.bundle, &k, LayoutId::Stereo, dir.path()) {
        Err(IngestError::SampleRateMismatch { expected: 48_000, found: 44_100, .. }) => {}
        other => panic!("{:?}", other.map(|_| ())),
    }
}
