//! Panning and distance laws.

use std::f64::consts::FRAC_PI_2;

use crate::geometry::{direction_of, pose_at, position_at, to_listener_frame, GeometryError};
use crate::scene::{LayoutId, SceneProject, SourceTrack};

use super::layout::SpeakerLayout;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceParams {
    pub ref_distance: f64,
    pub rolloff: f64,
    pub max_distance: f64,
}

impl Default for DistanceParams {
    fn default() -> Self {
        Self {
            ref_distance: 1.0,
            rolloff: 1.0,
            max_distance: 10.0,
        }
    }
}

/// Inverse distance law, flat inside `ref_distance` and beyond `max_distance`.
pub fn distance_gain(d: f64, params: &DistanceParams) -> f64 {
    let r = params.ref_distance;
    let clamped = d.max(r).min(params.max_distance.max(r));
    r / (r + params.rolloff * (clamped - r))
}

fn wrap360(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Constant-power gains for every directional channel, in layout order
/// (the LFE channel is skipped).
pub fn pan_gains(azimuth: f64, layout: &SpeakerLayout) -> Vec<f64> {
    match layout.id {
        LayoutId::Mono => vec![1.0],
        LayoutId::Stereo => {
            let mut az = azimuth;
            if az > 180.0 || az <= -180.0 {
                az = wrap360(az + 180.0) - 180.0;
            }
            if az < -90.0 {
                az = -180.0 - az;
            } else if az > 90.0 {
                az = 180.0 - az;
            }
            let x = (az + 90.0) / 180.0;
            vec![(x * FRAC_PI_2).cos(), (x * FRAC_PI_2).sin()]
        }
        LayoutId::Quad | LayoutId::FiveOne => ring_gains(azimuth, layout),
    }
}

fn ring_gains(azimuth: f64, layout: &SpeakerLayout) -> Vec<f64> {
    // (slot in the directional list, azimuth on [0, 360))
    let mut ring: Vec<(usize, f64)> = layout.directional().enumerate().map(|(slot, (_, az))| (slot, wrap360(az))).collect();
    ring.sort_by(|a, b| a.1.total_cmp(&b.1));
    let n = ring.len();
    let mut gains = vec![0.0; n];
    let az = wrap360(azimuth);

    // The pair (ring[i], ring[i + 1]) with ring[i] <= az < ring[i + 1];
    // when az is below the first speaker the pair wraps from the last one.
    let upper = ring.partition_point(|&(_, a)| a <= az);
    let lo = ring[(upper + n - 1) % n];
    let hi = ring[upper % n];
    let arc = wrap360(hi.1 - lo.1);
    let alpha = if arc == 0.0 { 0.0 } else { wrap360(az - lo.1) / arc };
    gains[lo.0] = (alpha * FRAC_PI_2).cos();
    gains[hi.0] = (alpha * FRAC_PI_2).sin();
    gains
}

/// Gains for one source over every output channel at `t` seconds.
pub fn source_channel_gains(
    track: &SourceTrack,
    project: &SceneProject,
    t: f64,
    layout: &SpeakerLayout,
    distance: &DistanceParams,
) -> Result<Vec<f64>, GeometryError> {
    let (azimuth, scale) = if track.directional {
        let world = position_at(track, t, project.use_model_positions)?;
        let local = to_listener_frame(&pose_at(&project.listener.keyframes, t), world);
        let rel = direction_of(local);
        (rel.azimuth, track.gain * distance_gain(rel.distance, distance))
    } else {
        (0.0, track.gain)
    };
    let mut out = vec![0.0; layout.channel_count()];
    for ((channel, _), g) in layout.directional().zip(pan_gains(azimuth, layout)) {
        out[channel] = scale * g;
    }
    Ok(out)
}
