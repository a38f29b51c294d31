//! RIFF/WAVE reading and writing.
//!
//! Files with one or two channels are written with the plain 16-byte `fmt `
//! chunk (44-byte header). Four and six channel files use
//! `WAVE_FORMAT_EXTENSIBLE` with a speaker mask so players route channels
//! in layout order. Everything is little-endian.

use thiserror::Error;

use crate::spatializer::RenderedBuffer;

const FORMAT_PCM: u16 = 0x0001;
const FORMAT_IEEE_FLOAT: u16 = 0x0003;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

/// Trailing 14 bytes shared by the KSDATAFORMAT_SUBTYPE_* GUIDs.
const SUBFORMAT_TAIL: [u8; 14] = [
    0x00, 0x00, 0x00, 0x00, 0x10, 0x00, 0x80, 0x00, 0x00, 0xAA, 0x00, 0x38, 0x9B, 0x71,
];

pub const MASK_QUAD: u32 = 0x33; // FL | FR | BL | BR
pub const MASK_FIVE_ONE: u32 = 0x3F; // FL | FR | FC | LFE | BL | BR

pub const SUPPORTED_RATES: [u32; 2] = [44_100, 48_000];

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt WAV file: {0}")]
    CorruptFile(String),
    #[error("unsupported sample rate {0} Hz (expected 44100 or 48000)")]
    UnsupportedRate(u32),
    #[error("cannot write {0} channels (expected 1, 2, 4 or 6)")]
    UnsupportedChannelCount(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Mono audio ready for mixing.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub sample_rate: u32,
    pub samples: Vec<f32>,
}

impl AudioClip {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Int16,
    Int24,
    Float32,
}

impl BitDepth {
    pub fn from_bits(bits: u16) -> Option<BitDepth> {
        match bits {
            16 => Some(BitDepth::Int16),
            24 => Some(BitDepth::Int24),
            32 => Some(BitDepth::Float32),
            _ => None,
        }
    }

    pub fn bits(self) -> u16 {
        match self {
            BitDepth::Int16 => 16,
            BitDepth::Int24 => 24,
            BitDepth::Float32 => 32,
        }
    }

    fn is_float(self) -> bool {
        self == BitDepth::Float32
    }
}

/// A decoded file with its channels kept apart.
#[derive(Debug, Clone, PartialEq)]
pub struct WavData {
    pub sample_rate: u32,
    pub channels: u16,
    pub bit_depth: BitDepth,
    /// Present only for `WAVE_FORMAT_EXTENSIBLE` files.
    pub channel_mask: Option<u32>,
    /// Interleaved frames.
    pub samples: Vec<f32>,
}

impl WavData {
    pub fn frames(&self) -> usize {
        self.samples.len() / usize::from(self.channels.max(1))
    }

    pub fn channel(&self, index: usize) -> Vec<f32> {
        self.samples
            .iter()
            .skip(index)
            .step_by(usize::from(self.channels))
            .copied()
            .collect()
    }
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Decode a WAV file without any channel or rate restriction.
pub fn decode_wav(bytes: &[u8]) -> Result<WavData, AudioError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(AudioError::CorruptFile("missing RIFF/WAVE header".into()));
    }
    let mut fmt: Option<&[u8]> = None;
    let mut data: Option<&[u8]> = None;
    let mut at = 12;
    while at + 8 <= bytes.len() {
        let id = &bytes[at..at + 4];
        let size = u32_at(bytes, at + 4) as usize;
        let body_start = at + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| AudioError::CorruptFile(format!("chunk `{}` overruns the file", String::from_utf8_lossy(id))))?;
        match id {
            b"fmt " => fmt = Some(&bytes[body_start..body_end]),
            b"data" => data = Some(&bytes[body_start..body_end]),
            _ => {}
        }
        // chunks are word aligned
        at = body_end + (size & 1);
    }
    let fmt = fmt.ok_or_else(|| AudioError::CorruptFile("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| AudioError::CorruptFile("no data chunk".into()))?;
    if fmt.len() < 16 {
        return Err(AudioError::CorruptFile("fmt chunk too short".into()));
    }

    let mut tag = u16_at(fmt, 0);
    let channels = u16_at(fmt, 2);
    let sample_rate = u32_at(fmt, 4);
    let block_align = u16_at(fmt, 12);
    let bits = u16_at(fmt, 14);
    let mut channel_mask = None;
    if tag == FORMAT_EXTENSIBLE {
        if fmt.len() < 40 {
            return Err(AudioError::CorruptFile("extensible fmt chunk too short".into()));
        }
        channel_mask = Some(u32_at(fmt, 20));
        if fmt[26..40] != SUBFORMAT_TAIL {
            return Err(AudioError::UnsupportedFormat("unknown extensible sub-format".into()));
        }
        tag = u16_at(fmt, 24);
    }
    let bit_depth = match (tag, bits) {
        (FORMAT_PCM, 16) => BitDepth::Int16,
        (FORMAT_PCM, 24) => BitDepth::Int24,
        (FORMAT_IEEE_FLOAT, 32) => BitDepth::Float32,
        (FORMAT_PCM | FORMAT_IEEE_FLOAT, _) => {
            return Err(AudioError::UnsupportedFormat(format!("{bits}-bit samples (format tag {tag:#06x})")))
        }
        _ => return Err(AudioError::UnsupportedFormat(format!("format tag {tag:#06x}"))),
    };
    if channels == 0 {
        return Err(AudioError::CorruptFile("zero channels".into()));
    }
    let width = usize::from(bits / 8);
    if usize::from(block_align) != width * usize::from(channels) {
        return Err(AudioError::CorruptFile(format!("block align {block_align} inconsistent with {channels}×{bits} bits")));
    }
    if data.len() % usize::from(block_align) != 0 {
        return Err(AudioError::CorruptFile("data chunk ends mid-frame".into()));
    }

    let samples = data
        .chunks_exact(width)
        .map(|s| match bit_depth {
            BitDepth::Int16 => f32::from(i16::from_le_bytes([s[0], s[1]])) / 32_768.0,
            BitDepth::Int24 => (i32::from_le_bytes([0, s[0], s[1], s[2]]) >> 8) as f32 / 8_388_608.0,
            BitDepth::Float32 => f32::from_le_bytes([s[0], s[1], s[2], s[3]]),
        })
        .collect();
    Ok(WavData {
        sample_rate,
        channels,
        bit_depth,
        channel_mask,
        samples,
    })
}

/// Read a mono or stereo stem; stereo is averaged down to mono.
pub fn read_wav(bytes: &[u8]) -> Result<AudioClip, AudioError> {
    let wav = decode_wav(bytes)?;
    if wav.channels > 2 {
        return Err(AudioError::UnsupportedFormat(format!("{} channel stem", wav.channels)));
    }
    if !SUPPORTED_RATES.contains(&wav.sample_rate) {
        return Err(AudioError::UnsupportedRate(wav.sample_rate));
    }
    let samples: Vec<f32> = if wav.channels == 2 {
        wav.samples.chunks_exact(2).map(|f| (f[0] + f[1]) * 0.5).collect()
    } else {
        wav.samples
    };
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(AudioError::CorruptFile("non-finite sample".into()));
    }
    Ok(AudioClip {
        sample_rate: wav.sample_rate,
        samples,
    })
}

pub fn read_wav_file(path: impl AsRef<std::path::Path>) -> Result<AudioClip, AudioError> {
    read_wav(&std::fs::read(path)?)
}

fn channel_mask(channels: usize) -> Option<u32> {
    match channels {
        4 => Some(MASK_QUAD),
        6 => Some(MASK_FIVE_ONE),
        _ => None,
    }
}

/// Encode interleaved samples. Integer formats clamp to [-1, 1].
pub fn encode_wav(samples: &[f32], channels: usize, sample_rate: u32, depth: BitDepth) -> Result<Vec<u8>, AudioError> {
    if !matches!(channels, 1 | 2 | 4 | 6) {
        return Err(AudioError::UnsupportedChannelCount(channels));
    }
    let width = usize::from(depth.bits() / 8);
    let block_align = (width * channels) as u16;
    let data_len = samples.len() * width;
    let pad = data_len % 2;
    let extensible = channel_mask(channels);
    let fmt_len: u32 = if extensible.is_some() { 40 } else { 16 };
    let base_tag = if depth.is_float() { FORMAT_IEEE_FLOAT } else { FORMAT_PCM };

    let mut out = Vec::with_capacity(20 + fmt_len as usize + 8 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(4 + 8 + fmt_len + 8 + (data_len + pad) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&fmt_len.to_le_bytes());
    out.extend_from_slice(&(if extensible.is_some() { FORMAT_EXTENSIBLE } else { base_tag }).to_le_bytes());
    out.extend_from_slice(&(channels as u16).to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * u32::from(block_align)).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&depth.bits().to_le_bytes());
    if let Some(mask) = extensible {
        out.extend_from_slice(&22u16.to_le_bytes());
        out.extend_from_slice(&depth.bits().to_le_bytes());
        out.extend_from_slice(&mask.to_le_bytes());
        out.extend_from_slice(&base_tag.to_le_bytes());
        out.extend_from_slice(&SUBFORMAT_TAIL);
    }
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in samples {
        match depth {
            BitDepth::Float32 => out.extend_from_slice(&s.to_le_bytes()),
            BitDepth::Int16 => {
                let q = (f64::from(s).clamp(-1.0, 1.0) * 32_768.0).round().clamp(-32_768.0, 32_767.0) as i16;
                out.extend_from_slice(&q.to_le_bytes());
            }
            BitDepth::Int24 => {
                let q = (f64::from(s).clamp(-1.0, 1.0) * 8_388_608.0).round().clamp(-8_388_608.0, 8_388_607.0) as i32;
                out.extend_from_slice(&q.to_le_bytes()[..3]);
            }
        }
    }
    if pad == 1 {
        out.push(0);
    }
    Ok(out)
}

/// Encode a render. Logs a warning when the peak exceeds full scale;
/// samples are never limited.
pub fn write_wav(buffer: &RenderedBuffer, depth: BitDepth) -> Result<Vec<u8>, AudioError> {
    let peak = buffer.peak();
    if peak > 1.0 {
        log::warn!("render peaks at {peak:.3} (> 1.0); integer export will clip");
    }
    encode_wav(&buffer.samples, buffer.channel_count, buffer.sample_rate, depth)
}

/// Mono clip as a WAV file; used for fixtures and stem export.
pub fn write_clip(clip: &AudioClip, depth: BitDepth) -> Vec<u8> {
    encode_wav(&clip.samples, 1, clip.sample_rate, depth).expect("mono is always writable")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pcm16_mono(value: i16, frames: usize) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(b"RIFF");
        b.extend_from_slice(&(36 + 2 * frames as u32).to_le_bytes());
        b.extend_from_slice(b"WAVEfmt ");
        b.extend_from_slice(&16u32.to_le_bytes());
        b.extend_from_slice(&1u16.to_le_bytes());
        b.extend_from_slice(&1u16.to_le_bytes());
        b.extend_from_slice(&48_000u32.to_le_bytes());
        b.extend_from_slice(&96_000u32.to_le_bytes());
        b.extend_from_slice(&2u16.to_le_bytes());
        b.extend_from_slice(&16u16.to_le_bytes());
        b.extend_from_slice(b"data");
        b.extend_from_slice(&(2 * frames as u32).to_le_bytes());
        for _ in 0..frames {
            b.extend_from_slice(&value.to_le_bytes());
        }
        b
    }

    #[test]
    fn pcm16_normalization() {
        let clip = read_wav(&pcm16_mono(32_767, 8)).unwrap();
        assert!((clip.samples[0] - 0.99997).abs() < 1e-5);
        let clip = read_wav(&pcm16_mono(-32_768, 1)).unwrap();
        assert_eq!(clip.samples[0], -1.0);
    }

    #[test]
    fn stereo_downmix_averages() {
        let interleaved: Vec<f32> = (0..32).map(|i| if i % 2 == 0 { 0.5 } else { -0.5 }).collect();
        let bytes = encode_wav(&interleaved, 2, 44_100, BitDepth::Float32).unwrap();
        let clip = read_wav(&bytes).unwrap();
        assert_eq!(clip.samples.len(), 16);
        assert!(clip.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn float_header_is_44_bytes() {
        let bytes = encode_wav(&[0.0; 8], 2, 48_000, BitDepth::Float32).unwrap();
        assert_eq!(bytes.len(), 44 + 32);
        assert_eq!(u16_at(&bytes, 20), FORMAT_IEEE_FLOAT);
    }

    #[test]
    fn extensible_for_surround() {
        let bytes = encode_wav(&[0.0; 12], 6, 48_000, BitDepth::Int24).unwrap();
        let wav = decode_wav(&bytes).unwrap();
        assert_eq!(wav.channels, 6);
        assert_eq!(wav.channel_mask, Some(MASK_FIVE_ONE));
        assert_eq!(wav.bit_depth, BitDepth::Int24);
        assert_eq!(u16_at(&bytes, 20), FORMAT_EXTENSIBLE);
        let quad = decode_wav(&encode_wav(&[0.0; 8], 4, 48_000, BitDepth::Int16).unwrap()).unwrap();
        assert_eq!(quad.channel_mask, Some(MASK_QUAD));
    }

    #[test]
    fn rejects_odd_channel_counts() {
        assert!(matches!(
            encode_wav(&[0.0; 3], 3, 48_000, BitDepth::Float32),
            Err(AudioError::UnsupportedChannelCount(3))
        ));
    }

    #[test]
    fn read_errors() {
        assert!(matches!(read_wav(b"not a wav"), Err(AudioError::CorruptFile(_))));
        let mut compressed = pcm16_mono(0, 4);
        compressed[20] = 0x55; // MPEG layer 3
        assert!(matches!(read_wav(&compressed), Err(AudioError::UnsupportedFormat(_))));
        let mut odd_rate = pcm16_mono(0, 4);
        odd_rate[24..28].copy_from_slice(&22_050u32.to_le_bytes());
        assert!(matches!(read_wav(&odd_rate), Err(AudioError::UnsupportedRate(22_050))));
        let mut truncated = pcm16_mono(0, 4);
        truncated.truncate(truncated.len() - 3);
        assert!(matches!(read_wav(&truncated), Err(AudioError::CorruptFile(_))));
        let surround = encode_wav(&[0.0; 6], 6, 48_000, BitDepth::Float32).unwrap();
        assert!(matches!(read_wav(&surround), Err(AudioError::UnsupportedFormat(_))));
    }

    #[test]
    fn int_round_trips_within_one_lsb() {
        let src: Vec<f32> = (0..200).map(|i| ((i as f32) * 0.0137).sin() * 0.9).collect();
        let back = decode_wav(&encode_wav(&src, 1, 48_000, BitDepth::Int16).unwrap()).unwrap();
        for (a, b) in src.iter().zip(&back.samples) {
            assert!((a - b).abs() <= 1.0 / 32_768.0);
        }
        let back = decode_wav(&encode_wav(&src, 1, 48_000, BitDepth::Int24).unwrap()).unwrap();
        for (a, b) in src.iter().zip(&back.samples) {
            assert!((a - b).abs() <= 1.0 / 8_388_608.0);
        }
        // full scale clips to the largest code
        let back = decode_wav(&encode_wav(&[1.0, -1.0], 1, 48_000, BitDepth::Int16).unwrap()).unwrap();
        assert_eq!(back.samples, vec![32_767.0 / 32_768.0, -1.0]);
    }
}
