//! Speaker layouts, gain laws and the block renderer.

mod gains;
mod layout;
mod render;

pub use gains::{distance_gain, pan_gains, source_channel_gains, DistanceParams};
pub use layout::{ChannelKind, SpeakerChannel, SpeakerLayout};
pub use render::{
    block_meters, render_block, render_offline, GainState, RenderConfig, RenderError, RenderStrategy, RenderedBlock,
    RenderedBuffer, Renderer, StemLibrary, DEFAULT_BLOCK_SIZE, FALLBACK_SAMPLE_RATE, MAX_BLOCK_SIZE, MIN_BLOCK_SIZE,
};
