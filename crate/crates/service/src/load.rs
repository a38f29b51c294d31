//! Reading bundles and project files from disk, shared by the CLI and
//! `POST /project`.

use std::path::{Path, PathBuf};

use auralis_core::ingest::{build_default_project, default_intrinsics, parse_bundle, IngestError};
use auralis_core::scene::{load_project, LayoutId, SceneError, SceneProject};
use auralis_core::spatializer::{RenderConfig, RenderError, Renderer, SpeakerLayout, StemLibrary};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("reading `{}`: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

#[derive(Debug)]
pub struct Loaded {
    pub project: SceneProject,
    pub stems: StemLibrary,
    /// Directory relative stem references resolve against.
    pub base_dir: PathBuf,
}

fn read(path: &Path) -> Result<Vec<u8>, LoadError> {
    std::fs::read(path).map_err(|source| LoadError::Io { path: path.to_owned(), source })
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_owned(),
        _ => PathBuf::from("."),
    }
}

/// Ingest an annotation bundle into its default project.
pub fn load_bundle_file(path: &Path, layout: LayoutId) -> Result<Loaded, LoadError> {
    let bundle = parse_bundle(&read(path)?)?;
    let base_dir = parent_dir(path);
    let k = default_intrinsics(&bundle);
    let (project, stems) = build_default_project(&bundle, &k, layout, &base_dir)?;
    Ok(Loaded { project, stems, base_dir })
}

/// Read a `.auralis.json` project and every stem it references.
pub fn load_project_file(path: &Path) -> Result<Loaded, LoadError> {
    let project = load_project(&read(path)?)?;
    let base_dir = parent_dir(path);
    let stems = StemLibrary::load(&project, &base_dir)?;
    // surfaces mixed sample rates before anything is served
    Renderer::new(&project, &stems, SpeakerLayout::get(project.layout_id), RenderConfig::default())?;
    Ok(Loaded { project, stems, base_dir })
}

/// `<name>.bundle.json` becomes `<name>.auralis.json` in the same directory.
pub fn default_project_path(bundle: &Path) -> PathBuf {
    let name = bundle.file_name().and_then(|n| n.to_str()).unwrap_or("project");
    let stem = name
        .strip_suffix(".bundle.json")
        .or_else(|| name.strip_suffix(".json"))
        .unwrap_or(name);
    bundle.with_file_name(format!("{stem}.auralis.json"))
}

/// Rewrite relative stem references so they still resolve when the
/// project is saved into `target_dir` instead of `base_dir`.
pub fn rebase_stems(project: &mut SceneProject, base_dir: &Path, target_dir: &Path) {
    let same = match (base_dir.canonicalize(), target_dir.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => base_dir == target_dir,
    };
    if same {
        return;
    }
    for t in &mut project.tracks {
        let stem = Path::new(&t.stem_ref);
        if stem.is_relative() {
            let full = base_dir.join(stem);
            let full = full.canonicalize().unwrap_or(full);
            t.stem_ref = full.to_string_lossy().into_owned();
        }
    }
}
