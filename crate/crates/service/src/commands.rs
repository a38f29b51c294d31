//! The work behind each `auralis` subcommand.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::Context;
use auralis_core::audio_io::{write_wav, BitDepth};
use auralis_core::scene::{load_project, save_project, LayoutId, SceneError};
use auralis_core::spatializer::{RenderConfig, RenderStrategy, RenderedBuffer, Renderer, SpeakerLayout, StemLibrary};

use crate::config::ServiceConfig;
use crate::http::{router, AppState};
use crate::load::{default_project_path, load_bundle_file, load_project_file, rebase_stems};

/// Ingest `bundle` and write the default project. Returns the written path.
pub fn ingest(bundle: &Path, layout: LayoutId, output: Option<&Path>) -> anyhow::Result<PathBuf> {
    let mut loaded = load_bundle_file(bundle, layout)?;
    let out = output.map(Path::to_owned).unwrap_or_else(|| default_project_path(bundle));
    let target_dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    rebase_stems(&mut loaded.project, &loaded.base_dir, target_dir);
    std::fs::write(&out, save_project(&loaded.project)).with_context(|| format!("writing {}", out.display()))?;
    Ok(out)
}

pub fn render(
    project: &Path,
    layout: Option<LayoutId>,
    output: &Path,
    bits: u16,
    config: RenderConfig,
    strategy: RenderStrategy,
) -> anyhow::Result<RenderedBuffer> {
    let depth = BitDepth::from_bits(bits).with_context(|| format!("--bits must be 16, 24 or 32, got {bits}"))?;
    let loaded = load_project_file(project)?;
    let layout = layout.unwrap_or(loaded.project.layout_id);
    let buffer = Renderer::new(&loaded.project, &loaded.stems, SpeakerLayout::get(layout), config)?.render_offline(strategy)?;
    std::fs::write(output, write_wav(&buffer, depth)?).with_context(|| format!("writing {}", output.display()))?;
    Ok(buffer)
}

/// Every problem with a project file, one line each; empty when valid.
pub fn validate(project: &Path) -> anyhow::Result<Vec<String>> {
    let bytes = std::fs::read(project).with_context(|| format!("reading {}", project.display()))?;
    let parsed = match load_project(&bytes) {
        Ok(p) => p,
        Err(SceneError::Invariant(v)) => return Ok(v.iter().map(ToString::to_string).collect()),
        Err(e) => return Ok(vec![e.to_string()]),
    };
    let base = project.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let stems = match StemLibrary::load(&parsed, base) {
        Ok(s) => s,
        Err(e) => return Ok(vec![e.to_string()]),
    };
    Ok(match Renderer::new(&parsed, &stems, SpeakerLayout::get(parsed.layout_id), RenderConfig::default()) {
        Ok(_) => Vec::new(),
        Err(e) => vec![e.to_string()],
    })
}

pub enum Preload {
    Nothing,
    Bundle(PathBuf, LayoutId),
    Project(PathBuf),
}

pub async fn serve(addr: SocketAddr, config: ServiceConfig, preload: Preload) -> anyhow::Result<()> {
    let state = AppState::new(config);
    let loaded = match preload {
        Preload::Nothing => None,
        Preload::Bundle(path, layout) => Some(load_bundle_file(&path, layout)?),
        Preload::Project(path) => Some(load_project_file(&path)?),
    };
    if let Some(l) = loaded {
        state.store().load(l.project, l.stems, l.base_dir);
    }
    let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
