//! Independent reference implementations used to check the engine.
//!
//! Nothing here calls into the panner, geometry or renderer code paths it
//! is compared against; only plain data types are shared.

#![allow(dead_code)]

use auralis_core::geometry::Vec3;
use auralis_core::scene::{KeyframeOrigin, LayoutId, ListenerKeyframe, PositionKeyframe, SceneProject, SourceTrack};
use auralis_core::spatializer::StemLibrary;

fn lerp3(a: Vec3, b: Vec3, f: f64) -> Vec3 {
    Vec3::new(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), a.z + f * (b.z - a.z))
}

/// Piecewise-linear evaluation by linear scan with clamping.
fn scan(anchors: &[(f64, Vec3)], t: f64) -> Vec3 {
    let first = anchors[0];
    let last = anchors[anchors.len() - 1];
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    for w in anchors.windows(2) {
        let ((t0, p0), (t1, p1)) = (w[0], w[1]);
        if t == t0 {
            return p0;
        }
        if t > t0 && t < t1 {
            return lerp3(p0, p1, (t - t0) / (t1 - t0));
        }
    }
    last.1
}

/// Position of a track at `t`, evaluated directly from the override rules:
/// inside the span of the user keyframes interpolate user keyframes only;
/// before it (after it) interpolate the earlier (later) model keyframes,
/// bridging into the nearest user keyframe.
pub fn oracle_position(track: &SourceTrack, t: f64, use_model: bool) -> Option<Vec3> {
    let user: Vec<(f64, Vec3)> = track.user_keyframes.iter().map(|k| (k.t, k.p)).collect();
    let model: Vec<(f64, Vec3)> = track.model_keyframes.iter().map(|k| (k.t, k.p)).collect();
    if !use_model {
        if user.is_empty() {
            return model.first().map(|k| k.1);
        }
        let mut held = user[0].1;
        for &(kt, p) in &user {
            if kt <= t {
                held = p;
            }
        }
        return Some(held);
    }
    if user.is_empty() {
        return (!model.is_empty()).then(|| scan(&model, t));
    }
    let (u0, un) = (user[0], user[user.len() - 1]);
    if t >= u0.0 && t <= un.0 {
        return Some(scan(&user, t));
    }
    if t < u0.0 {
        let mut anchors: Vec<(f64, Vec3)> = model.iter().copied().filter(|k| k.0 < u0.0).collect();
        anchors.push(u0);
        return Some(scan(&anchors, t));
    }
    let mut anchors = vec![un];
    anchors.extend(model.iter().copied().filter(|k| k.0 > un.0));
    Some(scan(&anchors, t))
}

fn rot_y(v: Vec3, a: f64) -> Vec3 {
    Vec3::new(a.cos() * v.x + a.sin() * v.z, v.y, -a.sin() * v.x + a.cos() * v.z)
}

fn rot_x(v: Vec3, a: f64) -> Vec3 {
    Vec3::new(v.x, a.cos() * v.y - a.sin() * v.z, a.sin() * v.y + a.cos() * v.z)
}

fn rot_z(v: Vec3, a: f64) -> Vec3 {
    Vec3::new(a.cos() * v.x - a.sin() * v.y, a.sin() * v.x + a.cos() * v.y, v.z)
}

/// Undo yaw, then pitch, then roll, one axis at a time.
pub fn oracle_local(listener: &[ListenerKeyframe], t: f64, world: Vec3) -> Vec3 {
    let (pos, yaw, pitch, roll) = if listener.is_empty() {
        (Vec3::ZERO, 0.0, 0.0, 0.0)
    } else {
        let pick = |f: &dyn Fn(&ListenerKeyframe) -> f64| -> f64 {
            let anchors: Vec<(f64, Vec3)> = listener.iter().map(|k| (k.t, Vec3::new(f(k), 0.0, 0.0))).collect();
            scan(&anchors, t).x
        };
        let anchors: Vec<(f64, Vec3)> = listener.iter().map(|k| (k.t, k.position)).collect();
        (
            scan(&anchors, t),
            pick(&|k| k.orientation.yaw),
            pick(&|k| k.orientation.pitch),
            pick(&|k| k.orientation.roll),
        )
    };
    let d = Vec3::new(world.x - pos.x, world.y - pos.y, world.z - pos.z);
    rot_z(rot_x(rot_y(d, -yaw), -pitch), -roll)
}

pub fn oracle_distance_gain(d: f64) -> f64 {
    // ref 1, rolloff 1, max 10
    if d <= 1.0 {
        1.0
    } else if d >= 10.0 {
        0.1
    } else {
        1.0 / d
    }
}

/// `(channel index, azimuth)` of the directional speakers.
pub fn oracle_speakers(layout: LayoutId) -> Vec<(usize, f64)> {
    match layout {
        LayoutId::Mono => vec![(0, 0.0)],
        LayoutId::Stereo => vec![(0, -90.0), (1, 90.0)],
        LayoutId::Quad => vec![(0, -45.0), (1, 45.0), (2, -135.0), (3, 135.0)],
        LayoutId::FiveOne => vec![(0, -30.0), (1, 30.0), (2, 0.0), (4, -110.0), (5, 110.0)],
    }
}

pub fn oracle_channels(layout: LayoutId) -> usize {
    match layout {
        LayoutId::Mono => 1,
        LayoutId::Stereo => 2,
        LayoutId::Quad => 4,
        LayoutId::FiveOne => 6,
    }
}

/// Full-width gain vector for a source at `azimuth` degrees.
pub fn oracle_pan(layout: LayoutId, azimuth: f64) -> Vec<f64> {
    let mut out = vec![0.0; oracle_channels(layout)];
    let q = std::f64::consts::FRAC_PI_2;
    match layout {
        LayoutId::Mono => out[0] = 1.0,
        LayoutId::Stereo => {
            // fold the rear half-plane onto the front
            let s = azimuth.to_radians().sin().clamp(-1.0, 1.0);
            let folded = s.asin().to_degrees();
            let x = (folded + 90.0) / 180.0;
            out[0] = (x * q).cos();
            out[1] = (x * q).sin();
        }
        _ => {
            let speakers = oracle_speakers(layout);
            // try every ordered pair of speakers with no speaker strictly
            // inside the clockwise arc between them
            for &(ia, a) in &speakers {
                for &(ib, b) in &speakers {
                    if ia == ib {
                        continue;
                    }
                    let arc = (b - a).rem_euclid(360.0);
                    let blocked = speakers
                        .iter()
                        .any(|&(ic, c)| ic != ia && ic != ib && (c - a).rem_euclid(360.0) < arc);
                    if blocked {
                        continue;
                    }
                    let off = (azimuth - a).rem_euclid(360.0);
                    if off < arc {
                        let alpha = off / arc;
                        out[ia] = (alpha * q).cos();
                        out[ib] = (alpha * q).sin();
                        return out;
                    }
                }
            }
            unreachable!("azimuth {azimuth} not bracketed");
        }
    }
    out
}

pub fn oracle_gains(project: &SceneProject, track: &SourceTrack, t: f64, layout: LayoutId) -> Vec<f64> {
    if !track.directional {
        return oracle_pan(layout, 0.0).into_iter().map(|g| g * track.gain).collect();
    }
    let world = oracle_position(track, t, project.use_model_positions).expect("track has keyframes");
    let local = oracle_local(&project.listener.keyframes, t, world);
    let dist = (local.x * local.x + local.y * local.y + local.z * local.z).sqrt();
    let az = if dist == 0.0 { 0.0 } else { local.x.atan2(-local.z).to_degrees() };
    let scale = track.gain * oracle_distance_gain(dist);
    oracle_pan(layout, az).into_iter().map(|g| g * scale).collect()
}

/// Sample-by-sample renderer: exact gains at every sample instant.
pub fn naive_render(project: &SceneProject, stems: &StemLibrary, layout: LayoutId, sample_rate: u32) -> Vec<f32> {
    let channels = oracle_channels(layout);
    let frames = (project.video_meta.duration * f64::from(sample_rate)).round() as usize;
    let mut out = vec![0.0f32; frames * channels];
    for track in &project.tracks {
        let stem = &stems.get(&track.stem_ref).expect("stem loaded").samples;
        for n in 0..frames.min(stem.len()) {
            let g = oracle_gains(project, track, n as f64 / f64::from(sample_rate), layout);
            for ch in 0..channels {
                out[n * channels + ch] += stem[n] * g[ch] as f32;
            }
        }
    }
    out
}

pub fn kf(t: f64, x: f64, y: f64, z: f64) -> PositionKeyframe {
    PositionKeyframe {
        t,
        p: Vec3::new(x, y, z),
        origin: KeyframeOrigin::Model,
    }
}

pub fn user_kf(t: f64, x: f64, y: f64, z: f64) -> PositionKeyframe {
    PositionKeyframe {
        t,
        p: Vec3::new(x, y, z),
        origin: KeyframeOrigin::User,
    }
}

/// Minimum total box-center distance over every assignment of `dets` to
/// `tracks` (equal counts), by enumeration. Returns `perm` with
/// `perm[track] = detection`.
pub fn best_assignment(tracks: &[(f64, f64)], dets: &[(f64, f64)]) -> Vec<usize> {
    fn permute(rest: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if k == rest.len() {
            out.push(rest.clone());
            return;
        }
        for i in k..rest.len() {
            rest.swap(k, i);
            permute(rest, k + 1, out);
            rest.swap(k, i);
        }
    }
    let mut all = Vec::new();
    permute(&mut (0..dets.len()).collect(), 0, &mut all);
    all.into_iter()
        .min_by(|a, b| {
            let cost = |p: &Vec<usize>| -> f64 {
                p.iter()
                    .enumerate()
                    .map(|(ti, &di)| (tracks[ti].0 - dets[di].0).hypot(tracks[ti].1 - dets[di].1))
                    .sum()
            };
            cost(a).total_cmp(&cost(b))
        })
        .expect("at least one permutation")
}

pub fn rms_error(a: &[f32], b: &[f32]) -> f64 {
    assert_eq!(a.len(), b.len());
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (f64::from(*x) - f64::from(*y)).powi(2)).sum();
    (sum / a.len() as f64).sqrt()
}

pub fn max_abs_diff(a: &[f32], b: &[f32]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (f64::from(*x) - f64::from(*y)).abs()).fold(0.0, f64::max)
}

pub const RATE: u32 = 48_000;

/// Ten seconds, two tone sources, five_one. Both sources hold still for
/// the first and last three seconds and move in between; the listener
/// stays at the origin.
pub fn moving_scene() -> (SceneProject, StemLibrary) {
    use auralis_core::fixtures::tone;
    use auralis_core::scene::VideoMeta;

    let mut project = SceneProject::empty(
        VideoMeta { width: 1920, height: 1080, fps: 30.0, duration: 10.0 },
        LayoutId::FiveOne,
    );
    let mut a = SourceTrack::new("violin", "violin", "violin.wav");
    a.model_keyframes = vec![kf(0.0, -1.0, 0.0, -2.0), kf(3.0, -1.0, 0.0, -2.0), kf(7.0, 2.0, 0.0, -1.0), kf(10.0, 2.0, 0.0, -1.0)];
    let mut b = SourceTrack::new("flute", "flute", "flute.wav");
    b.gain = 0.8;
    b.model_keyframes = vec![kf(0.0, 0.5, 0.0, 3.0), kf(3.0, 0.5, 0.0, 3.0), kf(5.0, -3.0, 0.0, 0.5), kf(7.0, -1.0, 0.0, -4.0), kf(10.0, -1.0, 0.0, -4.0)];
    project.tracks = vec![a, b];

    let mut stems = StemLibrary::new();
    stems.insert("violin.wav", tone(440.0, 0.5, 10.0, RATE));
    stems.insert("flute.wav", tone(660.0, 0.5, 10.0, RATE));
    (project, stems)
}

/// Same sources as [`moving_scene`] but frozen at their first keyframe.
pub fn static_scene() -> (SceneProject, StemLibrary) {
    let (mut project, stems) = moving_scene();
    for t in &mut project.tracks {
        t.model_keyframes.truncate(1);
    }
    (project, stems)
}
