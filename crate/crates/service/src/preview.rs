//! Live preview: transport state, block rendering and the binary frame
//! format sent over the `/preview` socket.
//!
//! Frame layout, little-endian:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 1    | kind (0 audio, 1 heartbeat)             |
//! | 1      | 3    | reserved, zero                          |
//! | 4      | 4    | channel count (u32)                     |
//! | 8      | 4    | frame count (u32, 0 for heartbeats)     |
//! | 12     | 8    | block index (u64)                       |
//! | 20     | 8    | playhead at block start, seconds (f64)  |
//! | 28     | 4·c·n | interleaved f32 samples               |
//! | …      | 4·c  | per-channel RMS (f32), audio frames only |

use std::str::FromStr;

use auralis_core::scene::{LayoutId, SceneProject};
use auralis_core::spatializer::{GainState, RenderConfig, RenderError, Renderer, SpeakerLayout};
use serde::Serialize;

use crate::store::Snapshot;

pub const FRAME_HEADER_LEN: usize = 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    Audio = 0,
    Heartbeat = 1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub kind: FrameKind,
    pub channels: u32,
    pub frame_count: u32,
    pub block_index: u64,
    pub playhead: f64,
    pub samples: Vec<f32>,
    pub meters: Vec<f32>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame shorter than its header")]
    Truncated,
    #[error("unknown frame kind {0}")]
    UnknownKind(u8),
    #[error("payload is {found} bytes, header implies {expected}")]
    LengthMismatch { expected: usize, found: usize },
}

impl Frame {
    pub fn heartbeat(channels: usize, block_index: u64, playhead: f64) -> Self {
        Self {
            kind: FrameKind::Heartbeat,
            channels: channels as u32,
            frame_count: 0,
            block_index,
            playhead,
            samples: Vec::new(),
            meters: Vec::new(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FRAME_HEADER_LEN + 4 * (self.samples.len() + self.meters.len()));
        out.push(self.kind as u8);
        out.extend_from_slice(&[0; 3]);
        out.extend_from_slice(&self.channels.to_le_bytes());
        out.extend_from_slice(&self.frame_count.to_le_bytes());
        out.extend_from_slice(&self.block_index.to_le_bytes());
        out.extend_from_slice(&self.playhead.to_le_bytes());
        for s in self.samples.iter().chain(&self.meters) {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FrameError> {
        if bytes.len() < FRAME_HEADER_LEN {
            return Err(FrameError::Truncated);
        }
        let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
        let kind = match bytes[0] {
            0 => FrameKind::Audio,
            1 => FrameKind::Heartbeat,
            k => return Err(FrameError::UnknownKind(k)),
        };
        let channels = u32_at(4);
        let frame_count = u32_at(8);
        let block_index = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
        let playhead = f64::from_le_bytes(bytes[20..28].try_into().expect("8 bytes"));
        let n_samples = channels as usize * frame_count as usize;
        let n_meters = if kind == FrameKind::Audio { channels as usize } else { 0 };
        let expected = FRAME_HEADER_LEN + 4 * (n_samples + n_meters);
        if bytes.len() != expected {
            return Err(FrameError::LengthMismatch { expected, found: bytes.len() });
        }
        let floats: Vec<f32> = bytes[FRAME_HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        let (samples, meters) = floats.split_at(n_samples);
        Ok(Self {
            kind,
            channels,
            frame_count,
            block_index,
            playhead,
            samples: samples.to_vec(),
            meters: meters.to_vec(),
        })
    }
}

/// In-band transport commands, sent as text frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    Play,
    Pause,
    /// Absolute position in seconds.
    Seek(f64),
    /// Relative jump in whole seconds.
    Step(i32),
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("unrecognized command `{0}` (expected play, pause, seek <t> or step ±1)")]
pub struct CommandError(pub String);

impl FromStr for Command {
    type Err = CommandError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || CommandError(s.to_owned());
        let mut words = s.split_whitespace();
        let cmd = match (words.next(), words.next()) {
            (Some("play"), None) => Command::Play,
            (Some("pause"), None) => Command::Pause,
            (Some("seek"), Some(t)) => Command::Seek(t.parse().ok().filter(|t: &f64| t.is_finite()).ok_or_else(err)?),
            (Some("step"), Some(n)) => match n {
                "+1" | "1" => Command::Step(1),
                "-1" => Command::Step(-1),
                _ => return Err(err()),
            },
            _ => return Err(err()),
        };
        if words.next().is_some() {
            return Err(err());
        }
        Ok(cmd)
    }
}

/// Transport state reported after every command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionState {
    pub event: &'static str,
    pub session_id: u64,
    pub playing: bool,
    pub playhead: f64,
    pub layout: LayoutId,
    pub version: u64,
}

/// One listener's transport over the shared project.
#[derive(Debug, Clone)]
pub struct PreviewSession {
    pub session_id: u64,
    frame: u64,
    playing: bool,
    layout_override: Option<LayoutId>,
    gains: GainState,
    block_index: u64,
    sample_rate: u32,
}

fn renderer<'a>(snap: &'a Snapshot, layout: LayoutId, config: RenderConfig) -> Result<Renderer<'a>, RenderError> {
    Renderer::new(&snap.project, &snap.stems, SpeakerLayout::get(layout), config)
}

impl PreviewSession {
    /// A playing session starting at `from` seconds.
    pub fn new(session_id: u64, snap: &Snapshot, from: f64, layout_override: Option<LayoutId>) -> Result<Self, RenderError> {
        let mut session = Self {
            session_id,
            frame: 0,
            playing: true,
            layout_override,
            gains: GainState::default(),
            block_index: 0,
            sample_rate: 0,
        };
        session.sample_rate = renderer(snap, session.layout(&snap.project), RenderConfig::default())?.sample_rate();
        session.seek_to(&snap.project, from);
        Ok(session)
    }

    pub fn layout(&self, project: &SceneProject) -> LayoutId {
        self.layout_override.unwrap_or(project.layout_id)
    }

    pub fn playing(&self) -> bool {
        self.playing
    }

    pub fn frame(&self) -> u64 {
        self.frame
    }

    pub fn playhead(&self) -> f64 {
        self.frame as f64 / f64::from(self.sample_rate)
    }

    pub fn block_index(&self) -> u64 {
        self.block_index
    }

    fn total_frames(&self, project: &SceneProject) -> u64 {
        (project.duration() * f64::from(self.sample_rate)).round() as u64
    }

    fn seek_to(&mut self, project: &SceneProject, t: f64) {
        let t = t.clamp(0.0, project.duration());
        self.frame = ((t * f64::from(self.sample_rate)).round() as u64).min(self.total_frames(project));
        // a jump is a discontinuity anyway; start the next block unramped
        self.gains = GainState::default();
    }

    pub fn apply(&mut self, command: Command, snap: &Snapshot) {
        let project = &snap.project;
        match command {
            Command::Play => {
                if self.frame >= self.total_frames(project) {
                    self.seek_to(project, 0.0);
                }
                self.playing = true;
            }
            Command::Pause => self.playing = false,
            Command::Seek(t) => self.seek_to(project, t),
            Command::Step(n) => self.seek_to(project, self.playhead() + f64::from(n)),
        }
    }

    pub fn state(&self, snap: &Snapshot) -> SessionState {
        SessionState {
            event: "state",
            session_id: self.session_id,
            playing: self.playing,
            playhead: self.playhead(),
            layout: self.layout(&snap.project),
            version: snap.version,
        }
    }

    /// The next frame to send: a rendered block while playing, otherwise
    /// a heartbeat. Playback stops by itself after the last block.
    pub fn next_frame(&mut self, snap: &Snapshot, config: RenderConfig) -> Result<Frame, RenderError> {
        let layout = self.layout(&snap.project);
        let r = renderer(snap, layout, config)?;
        let total = r.total_frames();
        if self.sample_rate != r.sample_rate() {
            let t = self.playhead();
            self.sample_rate = r.sample_rate();
            self.seek_to(&snap.project, t);
        }
        if self.frame >= total {
            self.playing = false;
        }
        if !self.playing {
            return Ok(Frame::heartbeat(r.channel_count(), self.block_index, self.playhead()));
        }
        let count = (total - self.frame).min(r.block_size() as u64) as usize;
        let playhead = self.playhead();
        let block = r.render_tail_block(self.frame, count, &self.gains)?;
        let frame = Frame {
            kind: FrameKind::Audio,
            channels: r.channel_count() as u32,
            frame_count: count as u32,
            block_index: self.block_index,
            playhead,
            samples: block.samples,
            meters: block.meters,
        };
        self.gains = block.gains;
        self.frame += count as u64;
        self.block_index += 1;
        if self.frame >= total {
            self.playing = false;
        }
        Ok(frame)
    }
}
