//! Edit operations accepted by `PATCH /edits`.

use auralis_core::geometry::{Orientation, Vec3};
use auralis_core::scene::{
    validate, EditViolation, KeyframeOrigin, LayoutId, ListenerKeyframe, PositionKeyframe, SceneError, SceneProject,
    TrackProperty,
};
use serde::{Deserialize, Serialize};

fn user_origin() -> KeyframeOrigin {
    KeyframeOrigin::User
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Edit {
    KeyframeUpsert {
        track_id: String,
        t: f64,
        p: Vec3,
        #[serde(default = "user_origin")]
        origin: KeyframeOrigin,
    },
    KeyframeRemove {
        track_id: String,
        t: f64,
        #[serde(default = "user_origin")]
        origin: KeyframeOrigin,
    },
    TrackProperty {
        track_id: String,
        #[serde(flatten)]
        change: TrackProperty,
    },
    ListenerPose {
        t: f64,
        position: Vec3,
        #[serde(default)]
        orientation: Orientation,
    },
    /// The model-interpolation toggle.
    Toggle { use_model_positions: bool },
    Layout { layout: LayoutId },
}

/// Body of `PATCH /edits`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditRequest {
    pub base_version: u64,
    pub edit: Edit,
}

impl Edit {
    /// The stem this edit starts referencing, if any.
    pub fn new_stem_ref(&self) -> Option<&str> {
        match self {
            Edit::TrackProperty { change: TrackProperty::StemRef(s), .. } => Some(s),
            _ => None,
        }
    }

    /// Apply to `project`, returning the next snapshot or the violations
    /// that prevented it.
    pub fn apply(&self, project: &SceneProject) -> Result<SceneProject, Vec<EditViolation>> {
        let next = match self {
            Edit::KeyframeUpsert { track_id, t, p, origin } => {
                project.upsert_keyframe(track_id, PositionKeyframe { t: *t, p: *p, origin: *origin })
            }
            Edit::KeyframeRemove { track_id, t, origin } => project.remove_keyframe(track_id, *origin, *t),
            Edit::TrackProperty { track_id, change } => project.set_track_property(track_id, change.clone()),
            Edit::ListenerPose { t, position, orientation } => project.upsert_listener_keyframe(ListenerKeyframe {
                t: *t,
                position: *position,
                orientation: *orientation,
            }),
            Edit::Toggle { use_model_positions } => Ok(project.with_model_positions(*use_model_positions)),
            Edit::Layout { layout } => Ok(project.with_layout(*layout)),
        }
        .map_err(violations)?;
        let broken = validate(&next);
        if broken.is_empty() {
            Ok(next)
        } else {
            Err(broken)
        }
    }
}

fn violations(e: SceneError) -> Vec<EditViolation> {
    let one = |path: &str, message: String| vec![EditViolation { path: path.into(), message }];
    match e {
        SceneError::Invariant(v) => v,
        SceneError::UnknownTrack(id) => one("edit.track_id", format!("unknown track `{id}`")),
        SceneError::NonFiniteValue(path) => one(&path, "value must be finite".into()),
        SceneError::InvalidValue { path, message } => one(&path, message),
        SceneError::Schema { path, message } => one(&path, message),
        SceneError::Parse(message) => one("edit", message),
    }
}
