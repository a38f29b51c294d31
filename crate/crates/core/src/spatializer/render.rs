//! Block renderer.
//!
//! Each block samples every source's target gains once, at the block's end
//! time, and ramps linearly from the previous block's targets so gain
//! changes never produce a step. Because a block's starting gains are just
//! the targets at the previous block boundary, blocks of an offline render
//! are independent once the boundary gains are known; that is what the
//! parallel strategy exploits.

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::audio_io::{read_wav_file, AudioClip, AudioError};
use crate::geometry::GeometryError;
use crate::scene::{SceneProject, SourceTrack};

use super::gains::{source_channel_gains, DistanceParams};
use super::layout::SpeakerLayout;

pub const DEFAULT_BLOCK_SIZE: usize = 1024;
pub const MIN_BLOCK_SIZE: usize = 64;
pub const MAX_BLOCK_SIZE: usize = 8192;
/// Used when a project has no stems to take a rate from.
pub const FALLBACK_SAMPLE_RATE: u32 = 48_000;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("stem `{stem}` is {found} Hz but the render runs at {expected} Hz")]
    SampleRateMismatch { stem: String, expected: u32, found: u32 },
    #[error("no audio loaded for stem `{0}`")]
    MissingStem(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("block size {0} outside [{MIN_BLOCK_SIZE}, {MAX_BLOCK_SIZE}]")]
    InvalidBlockSize(usize),
    #[error("cannot meter an empty block")]
    EmptyBlock,
    #[error("loading stem `{stem}`: {source}")]
    Audio { stem: String, source: AudioError },
}

/// Decoded stems keyed by `stem_ref`.
#[derive(Debug, Clone, Default)]
pub struct StemLibrary {
    clips: HashMap<String, AudioClip>,
}

impl StemLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, stem_ref: impl Into<String>, clip: AudioClip) {
        self.clips.insert(stem_ref.into(), clip);
    }

    pub fn get(&self, stem_ref: &str) -> Option<&AudioClip> {
        self.clips.get(stem_ref)
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &AudioClip)> {
        self.clips.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Read every stem the project references, resolving relative
    /// references against `base_dir`.
    pub fn load(project: &SceneProject, base_dir: &Path) -> Result<Self, RenderError> {
        let mut lib = Self::new();
        for track in &project.tracks {
            if lib.clips.contains_key(&track.stem_ref) {
                continue;
            }
            let clip = read_wav_file(base_dir.join(&track.stem_ref)).map_err(|source| RenderError::Audio {
                stem: track.stem_ref.clone(),
                source,
            })?;
            lib.insert(track.stem_ref.clone(), clip);
        }
        Ok(lib)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderConfig {
    pub block_size: usize,
    pub distance: DistanceParams,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            block_size: DEFAULT_BLOCK_SIZE,
            distance: DistanceParams::default(),
        }
    }
}

impl RenderConfig {
    pub fn with_block_size(block_size: usize) -> Result<Self, RenderError> {
        check_block_size(block_size)?;
        Ok(Self {
            block_size,
            ..Self::default()
        })
    }
}

fn check_block_size(n: usize) -> Result<(), RenderError> {
    if (MIN_BLOCK_SIZE..=MAX_BLOCK_SIZE).contains(&n) {
        Ok(())
    } else {
        Err(RenderError::InvalidBlockSize(n))
    }
}

/// How an offline render spreads its blocks over threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderStrategy {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    Parallel,
}

impl Default for RenderStrategy {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            RenderStrategy::Parallel
        } else {
            RenderStrategy::Sequential
        }
    }
}

/// Per-track, per-channel gains carried from one block to the next.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GainState {
    entries: Vec<(String, Vec<f32>)>,
}

impl GainState {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, track_id: &str) -> Option<&[f32]> {
        self.entries.iter().find(|(id, _)| id == track_id).map(|(_, g)| g.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.entries.iter().map(|(id, g)| (id.as_str(), g.as_slice()))
    }

    fn lookup(&self, index: usize, track_id: &str) -> Option<&[f32]> {
        match self.entries.get(index) {
            Some((id, g)) if id == track_id => Some(g),
            _ => self.get(track_id),
        }
    }
}

/// Interleaved render output plus one meter frame per block.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedBuffer {
    pub sample_rate: u32,
    pub channel_count: usize,
    pub block_size: usize,
    pub samples: Vec<f32>,
    pub meter_frames: Vec<Vec<f32>>,
}

impl RenderedBuffer {
    pub fn frames(&self) -> usize {
        self.samples.len() / self.channel_count
    }

    pub fn channel(&self, index: usize) -> Vec<f32> {
        self.samples.iter().skip(index).step_by(self.channel_count).copied().collect()
    }

    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0f32, |m, s| m.max(s.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedBlock {
    pub samples: Vec<f32>,
    pub meters: Vec<f32>,
    pub gains: GainState,
}

/// Per-channel RMS of an interleaved block.
pub fn block_meters(samples: &[f32], channels: usize) -> Result<Vec<f32>, RenderError> {
    if samples.is_empty() || channels == 0 {
        return Err(RenderError::EmptyBlock);
    }
    let frames = samples.len() / channels;
    let mut sums = vec![0.0f64; channels];
    for frame in samples.chunks_exact(channels) {
        for (acc, &s) in sums.iter_mut().zip(frame) {
            *acc += f64::from(s) * f64::from(s);
        }
    }
    Ok(sums.into_iter().map(|s| (s / frames as f64).sqrt() as f32).collect())
}

/// A project bound to its audio and an output layout.
pub struct Renderer<'a> {
    project: &'a SceneProject,
    layout: &'static SpeakerLayout,
    config: RenderConfig,
    sample_rate: u32,
    sources: Vec<(&'a SourceTrack, &'a [f32])>,
}

impl<'a> Renderer<'a> {
    pub fn new(
        project: &'a SceneProject,
        stems: &'a StemLibrary,
        layout: &'static SpeakerLayout,
        config: RenderConfig,
    ) -> Result<Self, RenderError> {
        check_block_size(config.block_size)?;
        let mut sample_rate = None;
        let mut sources = Vec::with_capacity(project.tracks.len());
        for track in &project.tracks {
            let clip = stems
                .get(&track.stem_ref)
                .ok_or_else(|| RenderError::MissingStem(track.stem_ref.clone()))?;
            match sample_rate {
                None => sample_rate = Some(clip.sample_rate),
                Some(expected) if expected != clip.sample_rate => {
                    return Err(RenderError::SampleRateMismatch {
                        stem: track.stem_ref.clone(),
                        expected,
                        found: clip.sample_rate,
                    })
                }
                Some(_) => {}
            }
            sources.push((track, clip.samples.as_slice()));
        }
        Ok(Self {
            project,
            layout,
            config,
            sample_rate: sample_rate.unwrap_or(FALLBACK_SAMPLE_RATE),
            sources,
        })
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channel_count(&self) -> usize {
        self.layout.channel_count()
    }

    pub fn block_size(&self) -> usize {
        self.config.block_size
    }

    /// Length of the project in frames at the render rate.
    pub fn total_frames(&self) -> u64 {
        (self.project.duration() * f64::from(self.sample_rate)).round() as u64
    }

    pub fn frame_time(&self, frame: u64) -> f64 {
        frame as f64 / f64::from(self.sample_rate)
    }

    /// Every source's gains at the instant of `frame`.
    pub fn gains_at(&self, frame: u64) -> Result<GainState, RenderError> {
        let t = self.frame_time(frame);
        let entries = self
            .sources
            .iter()
            .map(|(track, _)| {
                let g = source_channel_gains(track, self.project, t, self.layout, &self.config.distance)?;
                Ok((track.id.clone(), g.into_iter().map(|x| x as f32).collect()))
            })
            .collect::<Result<_, RenderError>>()?;
        Ok(GainState { entries })
    }

    /// Render `frame_count` frames starting at `start`. Missing entries in
    /// `prev` begin at the gains of the block start.
    pub fn render_block(&self, start: u64, frame_count: usize, prev: &GainState) -> Result<RenderedBlock, RenderError> {
        check_block_size(frame_count)?;
        self.render_block_unchecked(start, frame_count, prev)
    }

    fn render_block_unchecked(&self, start: u64, frame_count: usize, prev: &GainState) -> Result<RenderedBlock, RenderError> {
        let target = self.gains_at(start + frame_count as u64)?;
        let covered = self
            .sources
            .iter()
            .enumerate()
            .all(|(i, (track, _))| prev.lookup(i, &track.id).is_some_and(|g| g.len() == self.channel_count()));
        let start_gains = if covered { None } else { Some(self.gains_at(start)?) };
        let mut samples = vec![0.0; frame_count * self.channel_count()];
        self.mix_into(&mut samples, start, prev, start_gains.as_ref(), &target);
        let meters = block_meters(&samples, self.channel_count())?;
        Ok(RenderedBlock {
            samples,
            meters,
            gains: target,
        })
    }

    /// Sum every source into `out` with gains ramped from `prev` (falling
    /// back to `fallback`, then to `target`) towards `target`.
    fn mix_into(&self, out: &mut [f32], start: u64, prev: &GainState, fallback: Option<&GainState>, target: &GainState) {
        let channels = self.channel_count();
        let frames = out.len() / channels;
        let ramp: Vec<f32> = (1..=frames).map(|i| i as f32 / frames as f32).collect();
        for (i, ((track, stem), (_, to))) in self.sources.iter().zip(&target.entries).enumerate() {
            let from = prev
                .lookup(i, &track.id)
                .filter(|g| g.len() == channels)
                .or_else(|| fallback.and_then(|f| f.lookup(i, &track.id)))
                .unwrap_or(to);
            // stems shorter than the render read as silence
            let offset = usize::try_from(start).unwrap_or(usize::MAX);
            let available = stem.len().saturating_sub(offset).min(frames);
            if available == 0 {
                continue;
            }
            let src = &stem[offset..offset + available];
            for ch in 0..channels {
                let (g0, g1) = (from[ch], to[ch]);
                if g0 == 0.0 && g1 == 0.0 {
                    continue;
                }
                let delta = g1 - g0;
                if delta == 0.0 {
                    for (frame, &s) in out.chunks_exact_mut(channels).zip(src) {
                        frame[ch] += s * g0;
                    }
                } else {
                    for ((frame, &s), &r) in out.chunks_exact_mut(channels).zip(src).zip(&ramp) {
                        frame[ch] += s * (g0 + delta * r);
                    }
                }
            }
        }
    }

    /// Block layout of a full render: `(start frame, frame count)`.
    fn blocks(&self) -> Vec<(u64, usize)> {
        let total = self.total_frames();
        let n = self.config.block_size as u64;
        (0..total.div_ceil(n))
            .map(|k| (k * n, (total - k * n).min(n) as usize))
            .collect()
    }

    /// Render the whole project. Every strategy produces bit-identical output.
    pub fn render_offline(&self, strategy: RenderStrategy) -> Result<RenderedBuffer, RenderError> {
        let channels = self.channel_count();
        let blocks = self.blocks();
        let mut samples = vec![0.0f32; self.total_frames() as usize * channels];
        let mut meter_frames = vec![Vec::new(); blocks.len()];

        // boundaries[k] is the gain state entering block k; the last entry
        // is the state after the final block.
        let mut indices: Vec<u64> = vec![0];
        indices.extend(blocks.iter().map(|&(s, n)| s + n as u64));

        let chunk = self.config.block_size * channels;
        match strategy {
            #[cfg(feature = "parallel")]
            RenderStrategy::Parallel => {
                use rayon::prelude::*;
                let boundaries = indices
                    .par_iter()
                    .map(|&f| self.gains_at(f))
                    .collect::<Result<Vec<_>, _>>()?;
                samples
                    .par_chunks_mut(chunk)
                    .zip(meter_frames.par_iter_mut())
                    .zip(blocks.par_iter())
                    .enumerate()
                    .for_each(|(k, ((out, meters), &(start, _)))| {
                        self.mix_into(out, start, &boundaries[k], None, &boundaries[k + 1]);
                        *meters = block_meters(out, channels).expect("blocks are non-empty");
                    });
            }
            _ => {
                let boundaries = indices.iter().map(|&f| self.gains_at(f)).collect::<Result<Vec<_>, _>>()?;
                for (k, ((out, meters), &(start, _))) in samples
                    .chunks_mut(chunk)
                    .zip(meter_frames.iter_mut())
                    .zip(blocks.iter())
                    .enumerate()
                {
                    self.mix_into(out, start, &boundaries[k], None, &boundaries[k + 1]);
                    *meters = block_meters(out, channels).expect("blocks are non-empty");
                }
            }
        }
        let buffer = RenderedBuffer {
            sample_rate: self.sample_rate,
            channel_count: channels,
            block_size: self.config.block_size,
            samples,
            meter_frames,
        };
        Ok(buffer)
    }

    /// Like [`Renderer::render_block`] but accepts a short final block.
    pub fn render_tail_block(&self, start: u64, frame_count: usize, prev: &GainState) -> Result<RenderedBlock, RenderError> {
        if frame_count == 0 {
            return Err(RenderError::EmptyBlock);
        }
        if frame_count > MAX_BLOCK_SIZE {
            return Err(RenderError::InvalidBlockSize(frame_count));
        }
        self.render_block_unchecked(start, frame_count, prev)
    }
}

/// Render one block of `project` starting at `start_frame`.
pub fn render_block(
    project: &SceneProject,
    stems: &StemLibrary,
    start_frame: u64,
    frame_count: usize,
    layout: &'static SpeakerLayout,
    prev: &GainState,
    config: RenderConfig,
) -> Result<RenderedBlock, RenderError> {
    Renderer::new(project, stems, layout, config)?.render_block(start_frame, frame_count, prev)
}

/// Render the full project with the default strategy.
pub fn render_offline(
    project: &SceneProject,
    stems: &StemLibrary,
    layout: &'static SpeakerLayout,
    config: RenderConfig,
) -> Result<RenderedBuffer, RenderError> {
    Renderer::new(project, stems, layout, config)?.render_offline(RenderStrategy::default())
}
