//! HTTP routes and the `/preview` socket.

use std::collections::VecDeque;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};

use auralis_core::audio_io::{write_wav, BitDepth};
use auralis_core::scene::{save_project, EditViolation, LayoutId};
use auralis_core::spatializer::{RenderStrategy, Renderer, SpeakerLayout};
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};

use crate::config::ServiceConfig;
use crate::edit::EditRequest;
use crate::load::{load_bundle_file, load_project_file, LoadError};
use crate::preview::{Command, CommandError, FrameKind, PreviewSession};
use crate::store::{ProjectStore, Snapshot, StoreError};

pub const VERSION_HEADER: &str = "x-project-version";

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("no project loaded")]
    NoProject,
    #[error("edit based on version {base}, head is {head}")]
    VersionConflict { base: u64, head: u64 },
    #[error("edit rejected")]
    ValidationFailed(Vec<EditViolation>),
    #[error("{0}")]
    BadRequest(String),
    #[error("all {0} preview sessions are in use")]
    SessionLimit(usize),
    #[error("{0}")]
    Internal(String),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    violations: Option<&'a [EditViolation]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    head: Option<u64>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = match &self {
            ApiError::NoProject => (StatusCode::NOT_FOUND, "no_project"),
            ApiError::VersionConflict { .. } => (StatusCode::CONFLICT, "version_conflict"),
            ApiError::ValidationFailed(_) => (StatusCode::UNPROCESSABLE_ENTITY, "validation_failed"),
            ApiError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            ApiError::SessionLimit(_) => (StatusCode::SERVICE_UNAVAILABLE, "session_limit"),
            ApiError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        let body = ErrorBody {
            error: code,
            message: self.to_string(),
            violations: match &self {
                ApiError::ValidationFailed(v) => Some(v),
                _ => None,
            },
            head: match &self {
                ApiError::VersionConflict { head, .. } => Some(*head),
                _ => None,
            },
        };
        (status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NoProject => ApiError::NoProject,
            StoreError::VersionConflict { base, head } => ApiError::VersionConflict { base, head },
            StoreError::ValidationFailed(v) => ApiError::ValidationFailed(v),
        }
    }
}

impl From<LoadError> for ApiError {
    fn from(e: LoadError) -> Self {
        ApiError::BadRequest(e.to_string())
    }
}

struct Inner {
    store: ProjectStore,
    config: ServiceConfig,
    sessions: AtomicUsize,
    next_session: AtomicU64,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            inner: Arc::new(Inner {
                store: ProjectStore::new(),
                config,
                sessions: AtomicUsize::new(0),
                next_session: AtomicU64::new(1),
            }),
        }
    }

    pub fn store(&self) -> &ProjectStore {
        &self.inner.store
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.config
    }

    pub fn active_sessions(&self) -> usize {
        self.inner.sessions.load(Ordering::SeqCst)
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/project", get(get_project).post(post_project))
        .route("/edits", patch(patch_edits))
        .route("/render", post(post_render))
        .route("/preview", get(preview))
        .with_state(state)
}

fn version_header(version: u64) -> (header::HeaderName, HeaderValue) {
    (header::HeaderName::from_static(VERSION_HEADER), HeaderValue::from(version))
}

async fn get_project(State(state): State<AppState>) -> Result<Response, ApiError> {
    let snap = state.store().head()?;
    let body = save_project(&snap.project);
    Ok((
        [(header::CONTENT_TYPE, HeaderValue::from_static("application/json")), version_header(snap.version)],
        body,
    )
        .into_response())
}

/// Body of `POST /project`: exactly one of `bundle` or `project`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadRequest {
    pub bundle: Option<PathBuf>,
    pub project: Option<PathBuf>,
    /// Output layout for an ingested bundle; defaults to stereo.
    pub layout: Option<LayoutId>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct VersionBody {
    pub version: u64,
}

async fn post_project(State(state): State<AppState>, Json(req): Json<LoadRequest>) -> Result<Json<VersionBody>, ApiError> {
    let loaded = tokio::task::spawn_blocking(move || match (req.bundle, req.project) {
        (Some(b), None) => load_bundle_file(&b, req.layout.unwrap_or(LayoutId::Stereo)).map_err(ApiError::from),
        (None, Some(p)) => {
            let mut loaded = load_project_file(&p)?;
            if let Some(layout) = req.layout {
                loaded.project = loaded.project.with_layout(layout);
            }
            Ok(loaded)
        }
        _ => Err(ApiError::BadRequest("give exactly one of `bundle` or `project`".into())),
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))??;
    let version = state.store().load(loaded.project, loaded.stems, loaded.base_dir);
    log::info!("project loaded as version {version}");
    Ok(Json(VersionBody { version }))
}

async fn patch_edits(State(state): State<AppState>, Json(req): Json<EditRequest>) -> Result<Json<VersionBody>, ApiError> {
    let version = state.store().apply(req.base_version, &req.edit)?;
    Ok(Json(VersionBody { version }))
}

#[derive(Debug, Deserialize)]
pub struct RenderQuery {
    pub layout: Option<LayoutId>,
    /// 16, 24 or 32 (float); defaults to 32.
    pub bits: Option<u16>,
}

async fn post_render(State(state): State<AppState>, Query(q): Query<RenderQuery>) -> Result<Response, ApiError> {
    let snap = state.store().head()?;
    let bits = q.bits.unwrap_or(32);
    let depth = BitDepth::from_bits(bits).ok_or_else(|| ApiError::BadRequest(format!("bits must be 16, 24 or 32, got {bits}")))?;
    let config = state.config().render;
    let version = snap.version;
    let bytes = tokio::task::spawn_blocking(move || -> Result<Vec<u8>, ApiError> {
        let layout = q.layout.unwrap_or(snap.project.layout_id);
        let renderer = Renderer::new(&snap.project, &snap.stems, SpeakerLayout::get(layout), config)
            .map_err(|e| ApiError::Internal(e.to_string()))?;
        let buffer = renderer.render_offline(RenderStrategy::default()).map_err(|e| ApiError::Internal(e.to_string()))?;
        write_wav(&buffer, depth).map_err(|e| ApiError::Internal(e.to_string()))
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok((
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("audio/wav")),
            (header::CONTENT_DISPOSITION, HeaderValue::from_static("attachment; filename=\"render.wav\"")),
            version_header(version),
        ],
        bytes,
    )
        .into_response())
}

#[derive(Debug, Clone, Deserialize)]
pub struct PreviewQuery {
    /// Start position in seconds.
    #[serde(default)]
    pub from: f64,
    /// Fixed layout for this session; otherwise follows the project.
    pub layout: Option<LayoutId>,
    /// Pace blocks at playback speed (default) or send as fast as the
    /// client reads.
    #[serde(default = "yes")]
    pub realtime: bool,
}

fn yes() -> bool {
    true
}

/// Holds one slot of the session limit until dropped.
struct SessionSlot(AppState);

impl Drop for SessionSlot {
    fn drop(&mut self) {
        self.0.inner.sessions.fetch_sub(1, Ordering::SeqCst);
    }
}

fn reserve_slot(state: &AppState) -> Result<SessionSlot, ApiError> {
    let limit = state.config().max_sessions;
    let taken = state.inner.sessions.fetch_add(1, Ordering::SeqCst);
    let slot = SessionSlot(state.clone());
    if taken >= limit {
        return Err(ApiError::SessionLimit(limit));
    }
    Ok(slot)
}

async fn preview(State(state): State<AppState>, Query(q): Query<PreviewQuery>, ws: WebSocketUpgrade) -> Result<Response, ApiError> {
    state.store().head()?;
    if !q.from.is_finite() {
        return Err(ApiError::BadRequest("`from` must be finite".into()));
    }
    let slot = reserve_slot(&state)?;
    Ok(ws.on_upgrade(move |socket| run_session(socket, state, slot, q)))
}

async fn run_session(socket: WebSocket, state: AppState, slot: SessionSlot, q: PreviewQuery) {
    let (mut sink, mut incoming) = socket.split();
    let (out_tx, mut out_rx) = tokio::sync::mpsc::channel::<Message>(4);
    let (cmd_tx, cmd_rx) = mpsc::channel::<Result<Command, CommandError>>();
    let session_id = state.inner.next_session.fetch_add(1, Ordering::SeqCst);

    let render_state = state.clone();
    let thread = std::thread::Builder::new()
        .name(format!("preview-{session_id}"))
        .spawn(move || {
            let _slot = slot;
            render_loop(&render_state, session_id, &q, &cmd_rx, &out_tx);
        });
    if let Err(e) = thread {
        log::error!("cannot start preview thread: {e}");
        return;
    }

    let writer = tokio::spawn(async move {
        while let Some(msg) = out_rx.recv().await {
            if sink.send(msg).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });
    while let Some(Ok(msg)) = incoming.next().await {
        match msg {
            Message::Text(text) => {
                if cmd_tx.send(text.parse()).is_err() {
                    break;
                }
            }
            Message::Close(_) => break,
            _ => {}
        }
    }
    drop(cmd_tx);
    let _ = writer.await;
    log::debug!("preview session {session_id} closed");
}

fn text(value: &impl Serialize) -> Message {
    Message::Text(serde_json::to_string(value).expect("plain data serializes"))
}

#[derive(Serialize)]
struct ErrorEvent {
    event: &'static str,
    message: String,
}

fn error_event(message: impl ToString) -> Message {
    text(&ErrorEvent { event: "error", message: message.to_string() })
}

/// The per-session render thread. Takes the head snapshot wait-free at
/// every block boundary, so edits are heard from the next block on.
fn render_loop(
    state: &AppState,
    session_id: u64,
    q: &PreviewQuery,
    commands: &mpsc::Receiver<Result<Command, CommandError>>,
    out: &tokio::sync::mpsc::Sender<Message>,
) {
    let config = state.config();
    let send = |m: Message| out.blocking_send(m).is_ok();
    let Ok(mut snap) = state.store().head() else {
        send(error_event(StoreError::NoProject));
        return;
    };
    let mut session = match PreviewSession::new(session_id, &snap, q.from, q.layout) {
        Ok(s) => s,
        Err(e) => {
            send(error_event(e));
            return;
        }
    };
    if !send(text(&session.state(&snap))) {
        return;
    }
    let mut pending: VecDeque<Result<Command, CommandError>> = VecDeque::new();
    let mut deadline = Instant::now();
    loop {
        loop {
            match commands.try_recv() {
                Ok(c) => pending.push_back(c),
                Err(mpsc::TryRecvError::Empty) => break,
                Err(mpsc::TryRecvError::Disconnected) => return,
            }
        }
        let head = state.store().snapshot().unwrap_or_else(|| Arc::clone(&snap));
        let changed = head.version != snap.version;
        snap = head;
        let mut had_commands = false;
        for c in pending.drain(..) {
            match c {
                Ok(c) => {
                    session.apply(c, &snap);
                    had_commands = true;
                }
                Err(e) => {
                    if !send(error_event(e)) {
                        return;
                    }
                }
            }
        }
        if (changed || had_commands) && !send(text(&session.state(&snap))) {
            return;
        }
        if had_commands {
            deadline = Instant::now();
        }

        let frame = match session.next_frame(&snap, config.render) {
            Ok(f) => f,
            Err(e) => {
                if !send(error_event(e)) {
                    return;
                }
                session.apply(Command::Pause, &snap);
                continue;
            }
        };
        let audio = frame.kind == FrameKind::Audio;
        let frames = frame.frame_count;
        if !send(Message::Binary(frame.encode())) {
            return;
        }
        if audio {
            if q.realtime {
                deadline += block_duration(&snap, frames as usize);
                if let Some(wait) = deadline.checked_duration_since(Instant::now()) {
                    wait_for_command(commands, &mut pending, wait);
                }
            }
            if !session.playing() && !send(text(&session.state(&snap))) {
                return;
            }
        } else {
            let idle = if q.realtime { block_duration(&snap, config.render.block_size) } else { config.idle_heartbeat };
            if !wait_for_command(commands, &mut pending, idle) {
                return;
            }
            deadline = Instant::now();
        }
    }
}

fn block_duration(snap: &Snapshot, frames: usize) -> Duration {
    let rate = snap.stems.iter().next().map_or(auralis_core::spatializer::FALLBACK_SAMPLE_RATE, |(_, c)| c.sample_rate);
    Duration::from_secs_f64(frames as f64 / f64::from(rate))
}

/// Sleep up to `wait`, waking early for a command. Returns false once the
/// client is gone.
fn wait_for_command(
    commands: &mpsc::Receiver<Result<Command, CommandError>>,
    pending: &mut VecDeque<Result<Command, CommandError>>,
    wait: Duration,
) -> bool {
    match commands.recv_timeout(wait) {
        Ok(c) => {
            pending.push_back(c);
            true
        }
        Err(mpsc::RecvTimeoutError::Timeout) => true,
        Err(mpsc::RecvTimeoutError::Disconnected) => false,
    }
}
