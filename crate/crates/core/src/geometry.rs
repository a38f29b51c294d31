//! Camera model, keyframe evaluation and listener-relative coordinates.
//!
//! World space is right-handed: +x right, +y up, -z forward (the camera
//! looks down -z). Image space has its origin at the top-left pixel with v
//! growing downward.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{ListenerKeyframe, PositionKeyframe, SourceTrack};

/// Horizontal field of view assumed when a clip carries no camera metadata.
pub const DEFAULT_HFOV_DEG: f64 = 60.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("horizontal field of view {0}° outside (10°, 170°)")]
    InvalidFov(f64),
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("track `{0}` has no keyframes to evaluate")]
    NoKeyframes(String),
}

/// A point or direction in 3D, meters. Serialized as `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Linear interpolation; `lerp(a, a, f)` returns `a` exactly.
    pub fn lerp(self, other: Vec3, f: f64) -> Vec3 {
        Vec3::new(
            self.x + (other.x - self.x) * f,
            self.y + (other.y - self.y) * f,
            self.z + (other.z - self.z) * f,
        )
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Vec3::new(x, y, z)
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Listener orientation in radians. Applied yaw (about +y), then pitch
/// (about +x), then roll (about +z).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Orientation {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl Orientation {
    pub fn is_finite(&self) -> bool {
        self.yaw.is_finite() && self.pitch.is_finite() && self.roll.is_finite()
    }

    /// Row-major rotation matrix `Ry(yaw) * Rx(pitch) * Rz(roll)`.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let (sy, cy) = self.yaw.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        let (sr, cr) = self.roll.sin_cos();
        let ry = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
        let rx = [[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]];
        let rz = [[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]];
        mat_mul(&mat_mul(&ry, &rx), &rz)
    }
}

fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Position plus orientation of the virtual recording point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Orientation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub width: f64,
    pub height: f64,
    /// Horizontal focal length in pixels.
    pub focal_px: f64,
    /// Radians. Kept alongside `focal_px` so the UI can show it.
    pub assumed_hfov: f64,
}

impl CameraIntrinsics {
    /// Intrinsics for a frame using [`DEFAULT_HFOV_DEG`].
    pub fn with_default_fov(width: f64, height: f64) -> Self {
        intrinsics_from_fov(width, height, DEFAULT_HFOV_DEG.to_radians())
            .expect("default field of view is in range")
    }

    /// Pinhole projection of a camera-space point back to pixels.
    /// Returns `None` for points at or behind the image plane.
    pub fn project(&self, p: Vec3) -> Option<(f64, f64)> {
        let depth = -p.z;
        if depth <= 0.0 {
            return None;
        }
        let u = p.x * self.focal_px / depth + self.width / 2.0;
        let v = -p.y * self.focal_px / depth + self.height / 2.0;
        Some((u, v))
    }
}

/// `hfov` in radians, exclusive range (10°, 170°).
pub fn intrinsics_from_fov(
    width: f64,
    height: f64,
    hfov: f64,
) -> Result<CameraIntrinsics, GeometryError> {
    let deg = hfov.to_degrees();
    if !(deg > 10.0 && deg < 170.0) {
        return Err(GeometryError::InvalidFov(deg));
    }
    Ok(CameraIntrinsics {
        width,
        height,
        focal_px: (width / 2.0) / (hfov / 2.0).tan(),
        assumed_hfov: hfov,
    })
}

/// Lift pixel `(u, v)` at `depth` meters along the optical axis into
/// camera-centered world coordinates.
pub fn backproject(u: f64, v: f64, depth: f64, k: &CameraIntrinsics) -> Result<Vec3, GeometryError> {
    if depth.is_nan() || depth <= 0.0 {
        return Err(GeometryError::NonPositiveDepth(depth));
    }
    Ok(Vec3::new(
        (u - k.width / 2.0) * depth / k.focal_px,
        -(v - k.height / 2.0) * depth / k.focal_px,
        -depth,
    ))
}

/// Direction and range of a source as heard from the listener.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativePosition {
    /// Degrees in (-180, 180]; 0 straight ahead, positive to the right.
    pub azimuth: f64,
    pub elevation: f64,
    pub distance: f64,
}

/// Express `world` in the listener's frame: `Rᵀ · (world − position)`.
pub fn to_listener_frame(pose: &Pose, world: Vec3) -> Vec3 {
    let d = world - pose.position;
    let r = pose.orientation.matrix();
    Vec3::new(
        r[0][0] * d.x + r[1][0] * d.y + r[2][0] * d.z,
        r[0][1] * d.x + r[1][1] * d.y + r[2][1] * d.z,
        r[0][2] * d.x + r[1][2] * d.y + r[2][2] * d.z,
    )
}

pub fn direction_of(local: Vec3) -> RelativePosition {
    let distance = local.norm();
    if distance == 0.0 {
        return RelativePosition {
            azimuth: 0.0,
            elevation: 0.0,
            distance: 0.0,
        };
    }
    let mut azimuth = local.x.atan2(-local.z).to_degrees();
    // atan2 may return -180 for (−0, +z); keep the half-open range.
    if azimuth <= -180.0 {
        azimuth += 360.0;
    }
    RelativePosition {
        azimuth,
        elevation: (local.y / distance).clamp(-1.0, 1.0).asin().to_degrees(),
        distance,
    }
}

/// Piecewise-linear evaluation over a sorted keyframe slice, clamped at
/// both ends. `items` must be non-empty.
fn interpolate<T: Copy>(items: &[T], t: f64, time: impl Fn(&T) -> f64, lerp: impl Fn(T, T, f64) -> T) -> T {
    let idx = items.partition_point(|k| time(k) <= t);
    if idx == 0 {
        return items[0];
    }
    if idx == items.len() {
        return items[items.len() - 1];
    }
    let (a, b) = (items[idx - 1], items[idx]);
    let (ta, tb) = (time(&a), time(&b));
    lerp(a, b, (t - ta) / (tb - ta))
}

/// The keyframes position evaluation runs over when model positions are
/// enabled: every user keyframe, plus the model keyframes that fall
/// strictly before the first or after the last user keyframe.
pub fn effective_timeline(track: &SourceTrack) -> Vec<PositionKeyframe> {
    let (Some(first), Some(last)) = (track.user_keyframes.first(), track.user_keyframes.last()) else {
        return track.model_keyframes.clone();
    };
    let (lo, hi) = (first.t, last.t);
    let mut out: Vec<PositionKeyframe> = track.model_keyframes.iter().filter(|k| k.t < lo).copied().collect();
    out.extend(track.user_keyframes.iter().copied());
    out.extend(track.model_keyframes.iter().filter(|k| k.t > hi).copied());
    out
}

/// World position of `track` at `t` seconds.
///
/// With `use_model` the user keyframes override the model ones inside the
/// span they cover and the result is piecewise linear everywhere. Without
/// it, positions step-hold on the user keyframes; a track the user never
/// touched holds its first model position.
pub fn position_at(track: &SourceTrack, t: f64, use_model: bool) -> Result<Vec3, GeometryError> {
    if use_model {
        let timeline = effective_timeline(track);
        if timeline.is_empty() {
            return Err(GeometryError::NoKeyframes(track.id.clone()));
        }
        return Ok(interpolate(&timeline, t, |k| k.t, |a, b, f| PositionKeyframe {
            p: a.p.lerp(b.p, f),
            ..a
        })
        .p);
    }
    let user = &track.user_keyframes;
    if user.is_empty() {
        return track
            .model_keyframes
            .first()
            .map(|k| k.p)
            .ok_or_else(|| GeometryError::NoKeyframes(track.id.clone()));
    }
    let idx = user.partition_point(|k| k.t <= t);
    Ok(user[idx.saturating_sub(1)].p)
}

/// Listener pose at `t`; identity at the origin when there are no keyframes.
pub fn pose_at(keyframes: &[ListenerKeyframe], t: f64) -> Pose {
    if keyframes.is_empty() {
        return Pose::default();
    }
    let k = interpolate(keyframes, t, |k| k.t, |a, b, f| ListenerKeyframe {
        t: a.t,
        position: a.position.lerp(b.position, f),
        orientation: Orientation {
            yaw: a.orientation.yaw + (b.orientation.yaw - a.orientation.yaw) * f,
            pitch: a.orientation.pitch + (b.orientation.pitch - a.orientation.pitch) * f,
            roll: a.orientation.roll + (b.orientation.roll - a.orientation.roll) * f,
        },
    });
    Pose {
        position: k.position,
        orientation: k.orientation,
    }
}
