use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use auralis_core::scene::LayoutId;
use auralis_core::spatializer::{RenderConfig, RenderStrategy};
use auralis_service::commands::{self, Preload};
use auralis_service::config::{block_size_from_env, BLOCK_SIZE_ENV};
use auralis_service::ServiceConfig;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "auralis", version, about = "Spatial audio scenes from annotated video")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Turn an annotation bundle into a default project file.
    Ingest {
        bundle: PathBuf,
        #[arg(long, default_value = "stereo")]
        layout: LayoutId,
        /// Defaults to `<name>.auralis.json` beside the bundle.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Render a project to a WAV file.
    Render {
        project: PathBuf,
        /// Defaults to the project's own layout.
        #[arg(long)]
        layout: Option<LayoutId>,
        #[arg(short, long)]
        output: PathBuf,
        /// 16, 24 or 32 (float).
        #[arg(long, default_value_t = 32)]
        bits: u16,
        /// Overrides AURALIS_BLOCK_SIZE.
        #[arg(long)]
        block_size: Option<usize>,
        /// Render on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Check a project file and the stems it references.
    Validate { project: PathBuf },
    /// Serve the HTTP and preview API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Load this project at startup.
        #[arg(long, conflicts_with = "bundle")]
        project: Option<PathBuf>,
        /// Ingest this bundle at startup.
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long, default_value = "stereo")]
        layout: LayoutId,
        #[arg(long, default_value_t = ServiceConfig::default().max_sessions)]
        max_sessions: usize,
    },
}

fn block_size(flag: Option<usize>) -> anyhow::Result<usize> {
    match flag {
        Some(n) => Ok(n),
        None => block_size_from_env().with_context(|| format!("invalid {BLOCK_SIZE_ENV}")),
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Cmd::Ingest { bundle, layout, output } => {
            let out = commands::ingest(&bundle, layout, output.as_deref())?;
            println!("wrote {}", out.display());
        }
        Cmd::Render { project, layout, output, bits, block_size: flag, sequential } => {
            let config = RenderConfig::with_block_size(block_size(flag)?)?;
            let strategy = if sequential { RenderStrategy::Sequential } else { RenderStrategy::default() };
            let buffer = commands::render(&project, layout, &output, bits, config, strategy)?;
            println!(
                "wrote {} ({} ch, {} frames @ {} Hz, peak {:.3})",
                output.display(),
                buffer.channel_count,
                buffer.frames(),
                buffer.sample_rate,
                buffer.peak()
            );
        }
        Cmd::Validate { project } => {
            let problems = commands::validate(&project)?;
            if problems.is_empty() {
                println!("{}: ok", project.display());
            } else {
                for p in &problems {
                    eprintln!("{}: {p}", project.display());
                }
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::Serve { port, host, project, bundle, layout, max_sessions } => {
            let mut config = ServiceConfig::with_block_size(block_size(None)?)?;
            config.max_sessions = max_sessions;
            let preload = match (project, bundle) {
                (Some(p), _) => Preload::Project(p),
                (None, Some(b)) => Preload::Bundle(b, layout),
                (None, None) => Preload::Nothing,
            };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(commands::serve(SocketAddr::new(host, port), config, preload))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
