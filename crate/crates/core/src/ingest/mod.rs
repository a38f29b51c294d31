//! Turns an annotation bundle (per-frame detections, depth samples and
//! separated stems with audio tags) into a default [`SceneProject`].

mod synonyms;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio_io::{read_wav_file, AudioError};
use crate::geometry::{backproject, CameraIntrinsics, GeometryError};
use crate::scene::{EditViolation, KeyframeOrigin, LayoutId, PositionKeyframe, SceneProject, SourceTrack, VideoMeta};
use crate::spatializer::StemLibrary;

pub use synonyms::{SynonymError, SynonymTable};

/// Label given to ambient tracks whose stem carries no tags.
pub const AMBIENT_LABEL: &str = "ambient";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed bundle text: {0}")]
    Parse(String),
    #[error("bundle schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("bundle violates {} invariant(s); first: {}", .0.len(), .0[0])]
    Invariant(Vec<EditViolation>),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("reading stem `{stem}`: {source}")]
    Audio { stem: String, source: AudioError },
    #[error("stem `{stem}` is {found} Hz, other stems are {expected} Hz")]
    SampleRateMismatch { stem: String, expected: u32, found: u32 },
}

/// Relative depth 0 maps to `near` meters and 1 to `far`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthRange {
    pub near: f64,
    pub far: f64,
}

impl Default for DepthRange {
    fn default() -> Self {
        Self { near: 0.5, far: 10.0 }
    }
}

impl DepthRange {
    pub fn to_meters(&self, relative: f64) -> f64 {
        self.near + relative * (self.far - self.near)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: String,
    /// `[x0, y0, x1, y1]` in pixels.
    pub bbox: [f64; 4],
    /// Relative depth at the box center, in [0, 1].
    pub depth: f64,
}

impl Detection {
    pub fn center(&self) -> (f64, f64) {
        let [x0, y0, x1, y1] = self.bbox;
        ((x0 + x1) / 2.0, (y0 + y1) / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedFrame {
    pub t: f64,
    pub detections: Vec<Detection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioTag {
    pub label: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StemEntry {
    pub id: String,
    /// WAV path relative to the bundle file.
    pub path: String,
    #[serde(default)]
    pub tags: Vec<AudioTag>,
}

impl StemEntry {
    /// Highest-confidence tag; the first listed wins a tie.
    pub fn top_tag(&self) -> Option<&AudioTag> {
        self.tags.iter().fold(None, |best: Option<&AudioTag>, t| match best {
            Some(b) if b.confidence >= t.confidence => Some(b),
            _ => Some(t),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationBundle {
    pub video: VideoMeta,
    #[serde(default)]
    pub frames: Vec<AnnotatedFrame>,
    #[serde(default)]
    pub stems: Vec<StemEntry>,
    #[serde(default)]
    pub depth_range: DepthRange,
}

pub fn parse_bundle(bytes: &[u8]) -> Result<AnnotationBundle, IngestError> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| IngestError::Parse(e.to_string()))?;
    let bundle: AnnotationBundle = serde_path_to_error::deserialize(value).map_err(|e| IngestError::Schema {
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    })?;
    let violations = validate_bundle(&bundle);
    if !violations.is_empty() {
        return Err(IngestError::Invariant(violations));
    }
    Ok(bundle)
}

pub fn validate_bundle(b: &AnnotationBundle) -> Vec<EditViolation> {
    let mut out = Vec::new();
    let mut push = |path: String, message: String| out.push(EditViolation { path, message });
    let (w, h) = (f64::from(b.video.width), f64::from(b.video.height));
    let duration = b.video.duration;
    if !(duration.is_finite() && duration > 0.0) {
        push("video.duration".into(), format!("duration must be positive, got {duration}"));
    }
    let DepthRange { near, far } = b.depth_range;
    if !(near > 0.0 && far >= near && far.is_finite()) {
        push("depth_range".into(), format!("need 0 < near <= far, got [{near}, {far}]"));
    }
    let mut prev_t: Option<f64> = None;
    for (i, frame) in b.frames.iter().enumerate() {
        if !(frame.t.is_finite() && frame.t >= 0.0 && frame.t <= duration) {
            push(format!("frames[{i}].t"), format!("time {} outside [0, {duration}]", frame.t));
        }
        if let Some(p) = prev_t {
            if frame.t.is_nan() || frame.t <= p {
                push(format!("frames[{i}].t"), format!("time {} not after previous frame at {p}", frame.t));
            }
        }
        prev_t = Some(frame.t);
        for (j, d) in frame.detections.iter().enumerate() {
            let [x0, y0, x1, y1] = d.bbox;
            let inside = x0 >= 0.0 && y0 >= 0.0 && x1 <= w && y1 <= h && x0 <= x1 && y0 <= y1;
            if !inside {
                push(format!("frames[{i}].detections[{j}].bbox"), format!("box {:?} not within {w}×{h}", d.bbox));
            }
            if !(0.0..=1.0).contains(&d.depth) {
                push(format!("frames[{i}].detections[{j}].depth"), format!("relative depth {} outside [0, 1]", d.depth));
            }
            if d.label.trim().is_empty() {
                push(format!("frames[{i}].detections[{j}].label"), "empty label".into());
            }
        }
    }
    let mut ids = HashSet::new();
    for (i, stem) in b.stems.iter().enumerate() {
        if !ids.insert(stem.id.as_str()) {
            push(format!("stems[{i}].id"), format!("duplicate stem id `{}`", stem.id));
        }
        for (j, tag) in stem.tags.iter().enumerate() {
            if !(0.0..=1.0).contains(&tag.confidence) {
                push(
                    format!("stems[{i}].tags[{j}].confidence"),
                    format!("confidence {} outside [0, 1]", tag.confidence),
                );
            }
        }
    }
    out
}

/// A visual object followed across frames, before any stem is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSkeleton {
    pub label: String,
    pub model_keyframes: Vec<PositionKeyframe>,
    /// Box center of the most recent detection, pixels.
    last_center: (f64, f64),
}

impl TrackSkeleton {
    pub fn new(label: impl Into<String>, model_keyframes: Vec<PositionKeyframe>) -> Self {
        Self {
            label: label.into(),
            model_keyframes,
            last_center: (0.0, 0.0),
        }
    }
}

fn center_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Group detections into per-object tracks.
///
/// Same-label instances are matched to existing tracks greedily in order
/// of ascending box-center distance; leftovers open new tracks. Output is
/// ordered by track creation.
pub fn associate_tracks(b: &AnnotationBundle, k: &CameraIntrinsics) -> Result<Vec<TrackSkeleton>, IngestError> {
    let mut tracks: Vec<TrackSkeleton> = Vec::new();
    for frame in &b.frames {
        let mut labels: Vec<&str> = Vec::new();
        for d in &frame.detections {
            if !labels.contains(&d.label.as_str()) {
                labels.push(&d.label);
            }
        }
        for label in labels {
            let dets: Vec<&Detection> = frame.detections.iter().filter(|d| d.label == label).collect();
            let candidates: Vec<usize> = (0..tracks.len()).filter(|&i| tracks[i].label == label).collect();

            let mut pairs: Vec<(f64, usize, usize)> = candidates
                .iter()
                .flat_map(|&ti| dets.iter().enumerate().map(move |(di, d)| (ti, di, d)))
                .map(|(ti, di, d)| (center_distance(tracks[ti].last_center, d.center()), ti, di))
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

            let mut assigned: Vec<Option<usize>> = vec![None; dets.len()];
            let mut used = HashSet::new();
            for (_, ti, di) in pairs {
                if assigned[di].is_none() && !used.contains(&ti) {
                    assigned[di] = Some(ti);
                    used.insert(ti);
                }
            }
            for (di, d) in dets.iter().enumerate() {
                let ti = match assigned[di] {
                    Some(ti) => ti,
                    None => {
                        tracks.push(TrackSkeleton::new(label, Vec::new()));
                        tracks.len() - 1
                    }
                };
                let (u, v) = d.center();
                let p = backproject(u, v, b.depth_range.to_meters(d.depth), k)?;
                let track = &mut tracks[ti];
                track.last_center = (u, v);
                track.model_keyframes.push(PositionKeyframe {
                    t: frame.t,
                    p,
                    origin: KeyframeOrigin::Model,
                });
            }
        }
    }
    Ok(tracks)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BindingTarget {
    /// Index into the track skeleton list.
    Track { index: usize, label: String },
    Ambient,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StemBinding {
    pub stem_id: String,
    pub target: BindingTarget,
    /// Confidence of the tag used for matching; 0 when the stem has no tags.
    pub matched_confidence: f64,
}

/// Attach each stem to the earliest unbound track whose label shares the
/// stem's top tag's canonical name. Everything else becomes ambient.
pub fn bind_stems(tracks: &[TrackSkeleton], stems: &[StemEntry], synonyms: &SynonymTable) -> Vec<StemBinding> {
    let track_keys: Vec<String> = tracks.iter().map(|t| synonyms.normalize(&t.label)).collect();
    let mut bound = vec![false; tracks.len()];
    stems
        .iter()
        .map(|stem| {
            let Some(tag) = stem.top_tag() else {
                return StemBinding {
                    stem_id: stem.id.clone(),
                    target: BindingTarget::Ambient,
                    matched_confidence: 0.0,
                };
            };
            let wanted = synonyms.normalize(&tag.label);
            let target = match (0..tracks.len()).find(|&i| !bound[i] && track_keys[i] == wanted) {
                Some(i) => {
                    bound[i] = true;
                    BindingTarget::Track {
                        index: i,
                        label: tracks[i].label.clone(),
                    }
                }
                None => BindingTarget::Ambient,
            };
            StemBinding {
                stem_id: stem.id.clone(),
                target,
                matched_confidence: tag.confidence,
            }
        })
        .collect()
}

/// Distinct colors handed out to tracks in order.
const PALETTE: [[u8; 3]; 8] = [
    [230, 25, 75],
    [60, 180, 75],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
];

/// The default scene: one track per stem, in stem order, with the track
/// id taken from the stem id.
pub fn default_project(
    b: &AnnotationBundle,
    k: &CameraIntrinsics,
    layout: LayoutId,
    synonyms: &SynonymTable,
) -> Result<SceneProject, IngestError> {
    let skeletons = associate_tracks(b, k)?;
    let bindings = bind_stems(&skeletons, &b.stems, synonyms);
    let mut project = SceneProject::empty(b.video, layout);
    project.intrinsics = *k;
    for (i, (stem, binding)) in b.stems.iter().zip(&bindings).enumerate() {
        let mut track = SourceTrack::new(stem.id.clone(), AMBIENT_LABEL, stem.path.clone());
        track.color = PALETTE[i % PALETTE.len()];
        match &binding.target {
            BindingTarget::Track { index, label } => {
                track.label = label.clone();
                track.model_keyframes = skeletons[*index].model_keyframes.clone();
            }
            BindingTarget::Ambient => {
                track.directional = false;
                if let Some(tag) = stem.top_tag() {
                    track.label = tag.label.clone();
                }
            }
        }
        project.tracks.push(track);
    }
    Ok(project)
}

/// [`default_project`] with the builtin synonym table, after reading every
/// stem relative to `base_dir`. Returns the decoded stems alongside.
pub fn build_default_project(
    b: &AnnotationBundle,
    k: &CameraIntrinsics,
    layout: LayoutId,
    base_dir: &Path,
) -> Result<(SceneProject, StemLibrary), IngestError> {
    let mut stems = StemLibrary::new();
    let mut rate: Option<(u32, &str)> = None;
    for stem in &b.stems {
        let clip = read_wav_file(base_dir.join(&stem.path)).map_err(|source| IngestError::Audio {
            stem: stem.id.clone(),
            source,
        })?;
        match rate {
            Some((r, _)) if r != clip.sample_rate => {
                return Err(IngestError::SampleRateMismatch {
                    stem: stem.id.clone(),
                    expected: r,
                    found: clip.sample_rate,
                })
            }
            None => rate = Some((clip.sample_rate, &stem.id)),
            _ => {}
        }
        stems.insert(stem.path.clone(), clip);
    }
    let project = default_project(b, k, layout, &SynonymTable::builtin())?;
    Ok((project, stems))
}

/// Intrinsics for a bundle's frame size with the default field of view.
pub fn default_intrinsics(b: &AnnotationBundle) -> CameraIntrinsics {
    CameraIntrinsics::with_default_fov(f64::from(b.video.width), f64::from(b.video.height))
}
