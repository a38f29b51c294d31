//! The current project as an immutable, versioned snapshot.
//!
//! Readers (HTTP handlers and preview render threads) take the snapshot
//! with a wait-free atomic load and never hold a lock while rendering.
//! Writers are serialized through a mutex, so every accepted edit is
//! applied to the head it was checked against.

use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use arc_swap::ArcSwapOption;
use auralis_core::audio_io::read_wav_file;
use auralis_core::scene::{EditViolation, SceneProject};
use auralis_core::spatializer::StemLibrary;

use crate::edit::Edit;

#[derive(Debug)]
pub struct Snapshot {
    pub version: u64,
    pub project: Arc<SceneProject>,
    pub stems: Arc<StemLibrary>,
    /// Directory that relative stem references resolve against.
    pub base_dir: PathBuf,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StoreError {
    #[error("no project loaded")]
    NoProject,
    #[error("edit based on version {base}, head is {head}")]
    VersionConflict { base: u64, head: u64 },
    #[error("edit rejected: {} violation(s)", .0.len())]
    ValidationFailed(Vec<EditViolation>),
}

#[derive(Debug, Default)]
pub struct ProjectStore {
    current: ArcSwapOption<Snapshot>,
    writer: Mutex<u64>,
}

impl ProjectStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// The head snapshot, if a project is loaded.
    pub fn snapshot(&self) -> Option<Arc<Snapshot>> {
        self.current.load_full()
    }

    pub fn head(&self) -> Result<Arc<Snapshot>, StoreError> {
        self.snapshot().ok_or(StoreError::NoProject)
    }

    /// Replace the project wholesale. Versions keep counting up across
    /// loads so stale edits against an older project still conflict.
    pub fn load(&self, project: SceneProject, stems: StemLibrary, base_dir: impl Into<PathBuf>) -> u64 {
        let mut version = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        *version += 1;
        self.current.store(Some(Arc::new(Snapshot {
            version: *version,
            project: Arc::new(project),
            stems: Arc::new(stems),
            base_dir: base_dir.into(),
        })));
        *version
    }

    /// Apply `edit` if `base_version` is the head. Returns the new version.
    pub fn apply(&self, base_version: u64, edit: &Edit) -> Result<u64, StoreError> {
        let mut version = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let head = self.head()?;
        if head.version != base_version {
            return Err(StoreError::VersionConflict { base: base_version, head: head.version });
        }
        let project = edit.apply(&head.project).map_err(StoreError::ValidationFailed)?;
        let stems = match edit.new_stem_ref() {
            Some(stem_ref) if head.stems.get(stem_ref).is_none() => {
                Arc::new(with_stem(&head.stems, &head.base_dir, stem_ref).map_err(StoreError::ValidationFailed)?)
            }
            _ => Arc::clone(&head.stems),
        };
        *version += 1;
        self.current.store(Some(Arc::new(Snapshot {
            version: *version,
            project: Arc::new(project),
            stems,
            base_dir: head.base_dir.clone(),
        })));
        Ok(*version)
    }
}

fn with_stem(stems: &StemLibrary, base_dir: &Path, stem_ref: &str) -> Result<StemLibrary, Vec<EditViolation>> {
    let clip = read_wav_file(base_dir.join(stem_ref)).map_err(|e| {
        vec![EditViolation {
            path: "edit.value".into(),
            message: format!("cannot load stem `{stem_ref}`: {e}"),
        }]
    })?;
    let rate = stems.iter().next().map(|(_, c)| c.sample_rate);
    if let Some(rate) = rate.filter(|&r| r != clip.sample_rate) {
        return Err(vec![EditViolation {
            path: "edit.value".into(),
            message: format!("stem `{stem_ref}` is {} Hz, project stems are {rate} Hz", clip.sample_rate),
        }]);
    }
    let mut next = stems.clone();
    next.insert(stem_ref, clip);
    Ok(next)
}
