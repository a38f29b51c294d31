#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::Path;

use auralis_core::audio_io::{write_clip, BitDepth};
use auralis_core::fixtures::tone;
use auralis_service::{router, AppState};
use axum::body::Body;
use axum::http::{HeaderMap, Method, Request, StatusCode};
use futures::{SinkExt, StreamExt};
use http_body_util::BodyExt;
use tokio_tungstenite::tungstenite::Message;
use tower::ServiceExt;

use auralis_service::preview::{Frame, FrameKind};

pub const TWO_TRACKS: &str = include_str!("../../../core/tests/golden/two_tracks.auralis.json");
pub const TWO_TRACKS_CANONICAL: &str = include_str!("../golden/two_tracks.canonical.json");

/// `dir/project.auralis.json` plus its two 6 s stems.
pub fn write_two_tracks(dir: &Path) -> std::path::PathBuf {
    std::fs::create_dir_all(dir.join("stems")).unwrap();
    std::fs::write(dir.join("stems/violin.wav"), write_clip(&tone(440.0, 0.5, 6.0, 48_000), BitDepth::Float32)).unwrap();
    std::fs::write(dir.join("stems/flute.wav"), write_clip(&tone(660.0, 0.5, 6.0, 48_000), BitDepth::Float32)).unwrap();
    let path = dir.join("project.auralis.json");
    std::fs::write(&path, TWO_TRACKS).unwrap();
    path
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap()
    }

    pub fn version(&self) -> u64 {
        self.headers["x-project-version"].to_str().unwrap().parse().unwrap()
    }
}

pub async fn call(state: &AppState, method: Method, uri: &str, body: Option<serde_json::Value>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(serde_json::to_vec(&v).unwrap())
        }
        None => Body::empty(),
    };
    let res = router(state.clone()).oneshot(req.body(body).unwrap()).await.unwrap();
    let status = res.status();
    let headers = res.headers().clone();
    let body = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, headers, body }
}

pub async fn spawn_server(state: AppState) -> SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router(state)).await.unwrap() });
    addr
}

pub type Socket = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

pub async fn connect(addr: SocketAddr, query: &str) -> Socket {
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/preview?{query}")).await.unwrap();
    ws
}

#[derive(Debug)]
pub enum Event {
    Frame(Frame),
    Text(serde_json::Value),
}

pub async fn next_event(ws: &mut Socket) -> Event {
    loop {
        let msg = tokio::time::timeout(std::time::Duration::from_secs(20), ws.next())
            .await
            .expect("preview stalled")
            .expect("stream ended")
            .unwrap();
        match msg {
            Message::Binary(b) => return Event::Frame(Frame::decode(&b).unwrap()),
            Message::Text(t) => return Event::Text(serde_json::from_str(&t).unwrap()),
            _ => {}
        }
    }
}

/// Skip to the next state event and return it.
pub async fn next_state(ws: &mut Socket) -> serde_json::Value {
    loop {
        if let Event::Text(v) = next_event(ws).await {
            if v["event"] == "state" {
                return v;
            }
        }
    }
}

pub async fn send(ws: &mut Socket, text: &str) {
    ws.send(Message::Text(text.into())).await.unwrap();
}

/// Audio frames from now until playback stops by itself.
pub async fn collect_until_stopped(ws: &mut Socket) -> Vec<Frame> {
    let mut frames = Vec::new();
    loop {
        match next_event(ws).await {
            Event::Frame(f) if f.kind == FrameKind::Audio => frames.push(f),
            Event::Text(v) if v["event"] == "state" && v["playing"] == false => return frames,
            _ => {}
        }
    }
}
