//! Synthetic scenes with known ground truth.
//!
//! Objects follow scripted linear paths in image space and sound as pure
//! tones, so every detection, keyframe and sample is known by construction.
//! Used by the test suites and benchmarks; nothing here involves a model.

use std::f64::consts::TAU;
use std::io;
use std::path::Path;

use crate::audio_io::{write_clip, AudioClip, BitDepth};
use crate::ingest::{AnnotatedFrame, AnnotationBundle, AudioTag, DepthRange, Detection, StemEntry};
use crate::scene::VideoMeta;

pub fn tone(freq_hz: f64, amplitude: f32, seconds: f64, sample_rate: u32) -> AudioClip {
    let frames = (seconds * f64::from(sample_rate)).round() as usize;
    let samples = (0..frames)
        .map(|n| amplitude * (TAU * freq_hz * n as f64 / f64::from(sample_rate)).sin() as f32)
        .collect();
    AudioClip { sample_rate, samples }
}

pub fn constant(value: f32, frames: usize, sample_rate: u32) -> AudioClip {
    AudioClip {
        sample_rate,
        samples: vec![value; frames],
    }
}

/// An object moving linearly in image space from `start` to `end` over the
/// clip, each given as `(u px, v px, relative depth)`.
#[derive(Debug, Clone)]
pub struct ScriptedObject {
    pub label: String,
    /// Audio tag attached to the object's stem; `None` for a silent prop.
    pub tag: Option<String>,
    pub start: (f64, f64, f64),
    pub end: (f64, f64, f64),
    pub tone_hz: f64,
    pub box_size: f64,
}

impl ScriptedObject {
    pub fn new(label: &str, start: (f64, f64, f64), end: (f64, f64, f64), tone_hz: f64) -> Self {
        Self {
            label: label.into(),
            tag: Some(label.into()),
            start,
            end,
            tone_hz,
            box_size: 80.0,
        }
    }

    pub fn tagged(mut self, tag: &str) -> Self {
        self.tag = Some(tag.into());
        self
    }

    pub fn at(&self, f: f64) -> (f64, f64, f64) {
        let lerp = |a: f64, b: f64| a + (b - a) * f;
        (
            lerp(self.start.0, self.end.0),
            lerp(self.start.1, self.end.1),
            lerp(self.start.2, self.end.2),
        )
    }
}

/// A bundle plus the stem audio it references.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub bundle: AnnotationBundle,
    pub stems: Vec<(String, AudioClip)>,
}

#[derive(Debug, Clone)]
pub struct SceneScript {
    pub video: VideoMeta,
    /// Annotation sampling rate, frames per second.
    pub sample_fps: f64,
    pub sample_rate: u32,
    pub objects: Vec<ScriptedObject>,
    /// Stems with no visual counterpart: `(id, tag, tone Hz)`.
    pub extra_stems: Vec<(String, String, f64)>,
}

impl SceneScript {
    pub fn new(duration: f64) -> Self {
        Self {
            video: VideoMeta {
                width: 1920,
                height: 1080,
                fps: 30.0,
                duration,
            },
            sample_fps: 4.0,
            sample_rate: 48_000,
            objects: Vec::new(),
            extra_stems: Vec::new(),
        }
    }

    pub fn object(mut self, o: ScriptedObject) -> Self {
        self.objects.push(o);
        self
    }

    pub fn extra_stem(mut self, id: &str, tag: &str, tone_hz: f64) -> Self {
        self.extra_stems.push((id.into(), tag.into(), tone_hz));
        self
    }

    pub fn build(&self) -> Fixture {
        let duration = self.video.duration;
        let count = (duration * self.sample_fps).floor() as usize + 1;
        let frames = (0..count)
            .map(|i| {
                let t = i as f64 / self.sample_fps;
                let f = t / duration;
                let detections = self
                    .objects
                    .iter()
                    .map(|o| {
                        let (u, v, depth) = o.at(f);
                        let half = o.box_size / 2.0;
                        Detection {
                            label: o.label.clone(),
                            bbox: [u - half, v - half, u + half, v + half],
                            depth,
                        }
                    })
                    .collect();
                AnnotatedFrame { t, detections }
            })
            .collect();

        let mut stems = Vec::new();
        let mut entries = Vec::new();
        let mut add = |id: String, tag: &str, hz: f64| {
            let path = format!("stems/{id}.wav");
            entries.push(StemEntry {
                id,
                path: path.clone(),
                tags: vec![AudioTag {
                    label: tag.into(),
                    confidence: 0.9,
                }],
            });
            stems.push((path, tone(hz, 0.5, duration, self.sample_rate)));
        };
        for (i, o) in self.objects.iter().enumerate() {
            if let Some(tag) = &o.tag {
                add(format!("s{i}-{}", o.label.replace(' ', "_")), tag, o.tone_hz);
            }
        }
        for (id, tag, hz) in &self.extra_stems {
            add(id.clone(), tag, *hz);
        }
        Fixture {
            bundle: AnnotationBundle {
                video: self.video,
                frames,
                stems: entries,
                depth_range: DepthRange::default(),
            },
            stems,
        }
    }
}

impl Fixture {
    /// Write `<dir>/<name>.bundle.json` and the stems beside it; returns the
    /// bundle path.
    pub fn write_to(&self, dir: &Path, name: &str) -> io::Result<std::path::PathBuf> {
        for (path, clip) in &self.stems {
            let full = dir.join(path);
            if let Some(parent) = full.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(full, write_clip(clip, BitDepth::Float32))?;
        }
        let bundle_path = dir.join(format!("{name}.bundle.json"));
        let json = serde_json::to_string_pretty(&self.bundle).map_err(io::Error::other)?;
        std::fs::write(&bundle_path, json)?;
        Ok(bundle_path)
    }

    pub fn stem_library(&self) -> crate::spatializer::StemLibrary {
        let mut lib = crate::spatializer::StemLibrary::new();
        for (path, clip) in &self.stems {
            lib.insert(path.clone(), clip.clone());
        }
        lib
    }
}

/// Violin on the left, flute on the right, plus an untagged-looking
/// ambient stem.
pub fn duet(duration: f64) -> Fixture {
    SceneScript::new(duration)
        .object(ScriptedObject::new("violin", (480.0, 600.0, 0.2), (560.0, 600.0, 0.2), 440.0))
        .object(ScriptedObject::new("flute", (1440.0, 560.0, 0.3), (1380.0, 560.0, 0.25), 660.0))
        .extra_stem("wind", "wind noise", 110.0)
        .build()
}

/// Four sounding objects in a kitchen-like scene.
pub fn kitchen(duration: f64) -> Fixture {
    SceneScript::new(duration)
        .object(ScriptedObject::new("person", (900.0, 500.0, 0.15), (1100.0, 520.0, 0.2), 220.0).tagged("speech"))
        .object(ScriptedObject::new("knife", (700.0, 800.0, 0.1), (700.0, 800.0, 0.1), 1500.0).tagged("chopping (food)"))
        .object(ScriptedObject::new("microwave", (1600.0, 300.0, 0.4), (1600.0, 300.0, 0.4), 1000.0).tagged("beep"))
        .object(ScriptedObject::new("sink", (300.0, 600.0, 0.3), (300.0, 600.0, 0.3), 90.0).tagged("water tap"))
        .build()
}
