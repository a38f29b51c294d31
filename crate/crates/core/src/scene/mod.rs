//! The editable project document and the edits applied to it.
//!
//! A [`SceneProject`] is an immutable value: every edit returns a new
//! project and leaves the input untouched.

mod persist;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CameraIntrinsics, Orientation, Vec3};

pub use persist::{load_project, save_project, to_canonical_json};

/// Upper bound for track gain (+12 dB).
pub const MAX_TRACK_GAIN: f64 = 4.0;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("malformed project text: {0}")]
    Parse(String),
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("project violates {} invariant(s); first: {}", .0.len(), .0[0])]
    Invariant(Vec<EditViolation>),
    #[error("unknown track `{0}`")]
    UnknownTrack(String),
    #[error("non-finite value in `{0}`")]
    NonFiniteValue(String),
    #[error("invalid value for `{path}`: {message}")]
    InvalidValue { path: String, message: String },
}

/// One broken invariant, located by a field path such as
/// `tracks[1].user_keyframes[0].t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditViolation {
    pub path: String,
    pub message: String,
}

impl EditViolation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for EditViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutId {
    Mono,
    Stereo,
    Quad,
    FiveOne,
}

impl LayoutId {
    pub const ALL: [LayoutId; 4] = [LayoutId::Mono, LayoutId::Stereo, LayoutId::Quad, LayoutId::FiveOne];

    pub fn as_str(self) -> &'static str {
        match self {
            LayoutId::Mono => "mono",
            LayoutId::Stereo => "stereo",
            LayoutId::Quad => "quad",
            LayoutId::FiveOne => "five_one",
        }
    }
}

impl fmt::Display for LayoutId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LayoutId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LayoutId::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown layout `{s}` (expected mono, stereo, quad or five_one)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub width: u32,
    pub height: u32,
    pub fps: f64,
    /// Seconds.
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyframeOrigin {
    Model,
    User,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionKeyframe {
    pub t: f64,
    pub p: Vec3,
    pub origin: KeyframeOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ListenerKeyframe {
    pub t: f64,
    pub position: Vec3,
    pub orientation: Orientation,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ListenerPoseTrack {
    pub keyframes: Vec<ListenerKeyframe>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceTrack {
    pub id: String,
    pub label: String,
    pub color: [u8; 3],
    /// Audio clip id; a WAV path relative to the project file.
    pub stem_ref: String,
    pub gain: f64,
    pub model_keyframes: Vec<PositionKeyframe>,
    pub user_keyframes: Vec<PositionKeyframe>,
    /// False for ambient stems that have no visual counterpart.
    pub directional: bool,
}

impl SourceTrack {
    pub fn new(id: impl Into<String>, label: impl Into<String>, stem_ref: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            color: [255, 255, 255],
            stem_ref: stem_ref.into(),
            gain: 1.0,
            model_keyframes: Vec::new(),
            user_keyframes: Vec::new(),
            directional: true,
        }
    }

    fn keyframes_mut(&mut self, origin: KeyframeOrigin) -> &mut Vec<PositionKeyframe> {
        match origin {
            KeyframeOrigin::Model => &mut self.model_keyframes,
            KeyframeOrigin::User => &mut self.user_keyframes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneProject {
    #[serde(rename = "video")]
    pub video_meta: VideoMeta,
    pub tracks: Vec<SourceTrack>,
    pub listener: ListenerPoseTrack,
    #[serde(rename = "layout")]
    pub layout_id: LayoutId,
    pub intrinsics: CameraIntrinsics,
    pub use_model_positions: bool,
}

/// A single-field change to a track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "property", content = "value", rename_all = "snake_case")]
pub enum TrackProperty {
    Label(String),
    Gain(f64),
    Color([u8; 3]),
    StemRef(String),
}

impl SceneProject {
    /// A project with no tracks and default intrinsics for the frame size.
    pub fn empty(video_meta: VideoMeta, layout_id: LayoutId) -> Self {
        Self {
            video_meta,
            tracks: Vec::new(),
            listener: ListenerPoseTrack::default(),
            layout_id,
            intrinsics: CameraIntrinsics::with_default_fov(
                f64::from(video_meta.width),
                f64::from(video_meta.height),
            ),
            use_model_positions: true,
        }
    }

    pub fn duration(&self) -> f64 {
        self.video_meta.duration
    }

    pub fn track(&self, id: &str) -> Option<&SourceTrack> {
        self.tracks.iter().find(|t| t.id == id)
    }

    fn track_index(&self, id: &str) -> Result<usize, SceneError> {
        self.tracks
            .iter()
            .position(|t| t.id == id)
            .ok_or_else(|| SceneError::UnknownTrack(id.to_owned()))
    }

    /// Insert `kf` into the list selected by its origin, replacing any
    /// keyframe at the same time.
    pub fn upsert_keyframe(&self, track_id: &str, kf: PositionKeyframe) -> Result<SceneProject, SceneError> {
        let idx = self.track_index(track_id)?;
        if !kf.t.is_finite() || !kf.p.is_finite() {
            return Err(SceneError::NonFiniteValue(format!("tracks[{idx}].keyframe")));
        }
        if kf.t < 0.0 || kf.t > self.duration() {
            return Err(SceneError::InvalidValue {
                path: format!("tracks[{idx}].keyframe.t"),
                message: format!("time {} outside [0, {}]", kf.t, self.duration()),
            });
        }
        let mut next = self.clone();
        let list = next.tracks[idx].keyframes_mut(kf.origin);
        upsert_sorted(list, kf, |k| k.t);
        Ok(next)
    }

    /// Remove the keyframe at exactly `t` from the `origin` list.
    /// Removing a keyframe that does not exist is a no-op.
    pub fn remove_keyframe(&self, track_id: &str, origin: KeyframeOrigin, t: f64) -> Result<SceneProject, SceneError> {
        let idx = self.track_index(track_id)?;
        let mut next = self.clone();
        next.tracks[idx].keyframes_mut(origin).retain(|k| k.t != t);
        Ok(next)
    }

    pub fn set_track_property(&self, track_id: &str, property: TrackProperty) -> Result<SceneProject, SceneError> {
        let idx = self.track_index(track_id)?;
        let mut next = self.clone();
        let track = &mut next.tracks[idx];
        match property {
            TrackProperty::Label(label) => {
                if label.trim().is_empty() {
                    return Err(SceneError::InvalidValue {
                        path: format!("tracks[{idx}].label"),
                        message: "label must not be empty".into(),
                    });
                }
                track.label = label;
            }
            TrackProperty::Gain(gain) => {
                if !(0.0..=MAX_TRACK_GAIN).contains(&gain) {
                    return Err(SceneError::InvalidValue {
                        path: format!("tracks[{idx}].gain"),
                        message: format!("gain {gain} outside [0, {MAX_TRACK_GAIN}]"),
                    });
                }
                track.gain = gain;
            }
            TrackProperty::Color(color) => track.color = color,
            TrackProperty::StemRef(stem) => {
                if stem.is_empty() {
                    return Err(SceneError::InvalidValue {
                        path: format!("tracks[{idx}].stem_ref"),
                        message: "stem reference must not be empty".into(),
                    });
                }
                track.stem_ref = stem;
            }
        }
        Ok(next)
    }

    pub fn upsert_listener_keyframe(&self, kf: ListenerKeyframe) -> Result<SceneProject, SceneError> {
        if !kf.t.is_finite() || !kf.position.is_finite() || !kf.orientation.is_finite() {
            return Err(SceneError::NonFiniteValue("listener.keyframe".into()));
        }
        if kf.t < 0.0 || kf.t > self.duration() {
            return Err(SceneError::InvalidValue {
                path: "listener.keyframe.t".into(),
                message: format!("time {} outside [0, {}]", kf.t, self.duration()),
            });
        }
        let mut next = self.clone();
        upsert_sorted(&mut next.listener.keyframes, kf, |k| k.t);
        Ok(next)
    }

    pub fn with_layout(&self, layout_id: LayoutId) -> SceneProject {
        SceneProject {
            layout_id,
            ..self.clone()
        }
    }

    pub fn with_model_positions(&self, use_model_positions: bool) -> SceneProject {
        SceneProject {
            use_model_positions,
            ..self.clone()
        }
    }
}

fn upsert_sorted<T>(list: &mut Vec<T>, item: T, time: impl Fn(&T) -> f64) {
    let t = time(&item);
    let idx = list.partition_point(|k| time(k) < t);
    match list.get(idx) {
        Some(existing) if time(existing) == t => list[idx] = item,
        _ => list.insert(idx, item),
    }
}

/// Check every document invariant. Returns an empty list for a valid project.
pub fn validate(p: &SceneProject) -> Vec<EditViolation> {
    let mut out = Vec::new();
    let duration = p.video_meta.duration;
    if !(duration.is_finite() && duration > 0.0) {
        out.push(EditViolation::new("video.duration", format!("duration must be positive, got {duration}")));
    }
    if p.video_meta.width == 0 || p.video_meta.height == 0 {
        out.push(EditViolation::new("video", "frame size must be non-zero"));
    }
    if !(p.video_meta.fps.is_finite() && p.video_meta.fps > 0.0) {
        out.push(EditViolation::new("video.fps", "fps must be positive"));
    }
    let k = &p.intrinsics;
    for (name, v) in [("width", k.width), ("height", k.height), ("focal_px", k.focal_px)] {
        if !(v.is_finite() && v > 0.0) {
            out.push(EditViolation::new(format!("intrinsics.{name}"), format!("must be positive, got {v}")));
        }
    }

    let mut seen = HashSet::new();
    for (i, track) in p.tracks.iter().enumerate() {
        let base = format!("tracks[{i}]");
        if !seen.insert(track.id.as_str()) {
            out.push(EditViolation::new(format!("{base}.id"), format!("duplicate track id `{}`", track.id)));
        }
        if track.id.is_empty() {
            out.push(EditViolation::new(format!("{base}.id"), "track id must not be empty"));
        }
        if !(0.0..=MAX_TRACK_GAIN).contains(&track.gain) {
            out.push(EditViolation::new(
                format!("{base}.gain"),
                format!("gain {} outside [0, {MAX_TRACK_GAIN}]", track.gain),
            ));
        }
        for (list_name, list) in [("model_keyframes", &track.model_keyframes), ("user_keyframes", &track.user_keyframes)] {
            check_keyframes(
                &mut out,
                &format!("{base}.{list_name}"),
                list.iter().map(|k| (k.t, k.p.is_finite())),
                duration,
            );
        }
    }
    check_keyframes(
        &mut out,
        "listener.keyframes",
        p.listener
            .keyframes
            .iter()
            .map(|k| (k.t, k.position.is_finite() && k.orientation.is_finite())),
        duration,
    );
    out
}

fn check_keyframes(
    out: &mut Vec<EditViolation>,
    base: &str,
    keys: impl Iterator<Item = (f64, bool)>,
    duration: f64,
) {
    let mut prev: Option<f64> = None;
    for (j, (t, finite)) in keys.enumerate() {
        let path = format!("{base}[{j}]");
        if !finite {
            out.push(EditViolation::new(path.clone(), "non-finite value"));
        }
        if !t.is_finite() || t < 0.0 || t > duration {
            out.push(EditViolation::new(format!("{path}.t"), format!("time {t} outside [0, {duration}]")));
        }
        if let Some(p) = prev {
            if t.is_nan() || t <= p {
                out.push(EditViolation::new(format!("{path}.t"), format!("time {t} not after previous keyframe at {p}")));
            }
        }
        prev = Some(t);
    }
}
