use std::time::Duration;

use auralis_core::spatializer::{RenderConfig, RenderError, DEFAULT_BLOCK_SIZE};

/// Environment variable overriding the render block size, in frames.
pub const BLOCK_SIZE_ENV: &str = "AURALIS_BLOCK_SIZE";

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub render: RenderConfig,
    /// Concurrent preview sessions; further connections get `SessionLimit`.
    pub max_sessions: usize,
    /// Spacing of heartbeat frames while paused in fast (non-realtime) mode.
    pub idle_heartbeat: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            render: RenderConfig::default(),
            max_sessions: 4,
            idle_heartbeat: Duration::from_millis(20),
        }
    }
}

impl ServiceConfig {
    pub fn with_block_size(block_size: usize) -> Result<Self, RenderError> {
        Ok(Self {
            render: RenderConfig::with_block_size(block_size)?,
            ..Self::default()
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{BLOCK_SIZE_ENV}=`{0}` is not an integer")]
    NotANumber(String),
    #[error(transparent)]
    Render(#[from] RenderError),
}

/// Block size from `AURALIS_BLOCK_SIZE` if set, else the default.
pub fn block_size_from_env() -> Result<usize, ConfigError> {
    parse_block_size(std::env::var(BLOCK_SIZE_ENV).ok().as_deref())
}

pub fn parse_block_size(raw: Option<&str>) -> Result<usize, ConfigError> {
    let Some(raw) = raw.map(str::trim).filter(|s| !s.is_empty()) else {
        return Ok(DEFAULT_BLOCK_SIZE);
    };
    let n: usize = raw.parse().map_err(|_| ConfigError::NotANumber(raw.to_owned()))?;
    RenderConfig::with_block_size(n)?;
    Ok(n)
}
