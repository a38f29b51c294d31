//! Object-based spatial audio scenes.
//!
//! Per-frame visual annotations and separated stems become an editable
//! [`scene::SceneProject`] whose sources are placed in 3D; the
//! [`spatializer`] renders that scene to mono, stereo, quad or 5.1 in
//! fixed-size blocks with click-free gain ramps.

pub mod audio_io;
pub mod fixtures;
pub mod geometry;
pub mod ingest;
pub mod scene;
pub mod spatializer;

pub use geometry::Vec3;
pub use scene::{LayoutId, SceneProject};
pub use spatializer::{RenderConfig, RenderedBuffer, SpeakerLayout};
