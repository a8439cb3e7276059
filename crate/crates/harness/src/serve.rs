//! Session service: one live session at a time over a WebSocket, with
//! version media served read-only from the cache.
//!
//! All session input goes through one consumer task that owns the
//! [`SessionRunner`]; connections only forward messages to it. Events are
//! stamped with the service's session clock.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use adjustsat_core::analysis::write_results_csv;
use adjustsat_core::session::{
    current_trial_view, finalize, start_session, AudioSink, EventLogWriter, LogHeader, Phase,
    Playlist, RunnerError, SessionEvent, SessionRunner, TrialResult, TrialView,
    VersionAvailability,
};
use adjustsat_core::stimulus::{version_file_name, VersionCache};
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::mpsc;

use crate::analyze::RESULTS_FILE;

pub const DEFAULT_RECONNECT_GRACE: Duration = Duration::from_secs(60);
pub const INCOMPLETE_RESULTS_FILE: &str = "results_incomplete.csv";
pub const SESSIONS_DIR: &str = "sessions";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ClientMessage {
    Hello { pid: String },
    Event { event: SessionEvent },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ServerMessage {
    View {
        view: TrialView,
    },
    Audio {
        item_id: String,
        offset: f64,
        url: String,
        position_ms: u64,
        paused: bool,
    },
    Busy {
        message: String,
    },
    Error {
        message: String,
    },
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("item {item} is missing {missing} rendered version(s); run prepare first")]
    CacheMissing { item: String, missing: usize },
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub playlist: Arc<Playlist>,
    pub cache: VersionCache,
    pub results_dir: PathBuf,
    pub reconnect_grace: Duration,
    /// Directory with the participant UI's static files.
    pub ui_dir: Option<PathBuf>,
}

impl ServeConfig {
    /// Fails when a playlist item lacks rendered versions.
    pub fn check_cache(&self) -> Result<(), ServeError> {
        for item in self.playlist.entries() {
            let missing = self.cache.missing_versions(item);
            if missing > 0 {
                return Err(ServeError::CacheMissing {
                    item: item.id.clone(),
                    missing,
                });
            }
        }
        Ok(())
    }
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, config: ServeConfig) -> std::io::Result<()> {
    axum::serve(listener, app(config)).await
}

#[derive(Clone)]
struct AppState {
    config: Arc<ServeConfig>,
    commands: mpsc::Sender<Command>,
    next_conn: Arc<AtomicU64>,
}

/// Routes plus the session consumer task. Must be called inside a Tokio runtime.
pub fn app(config: ServeConfig) -> Router {
    let config = Arc::new(config);
    let (tx, rx) = mpsc::channel(256);
    let consumer = Consumer {
        config: config.clone(),
        commands: tx.clone(),
        conns: HashMap::new(),
        active: None,
    };
    tokio::spawn(consumer.run(rx));
    let state = AppState {
        config,
        commands: tx,
        next_conn: Arc::new(AtomicU64::new(1)),
    };
    Router::new()
        .route("/", get(index))
        .route("/ws", get(ws_upgrade))
        .route("/media/{item}/{file}", get(media))
        .route("/ui/{*path}", get(ui_file))
        .with_state(state)
}

async fn index(State(s): State<AppState>) -> Response {
    if let Some(dir) = &s.config.ui_dir {
        if let Ok(body) = tokio::fs::read(dir.join("index.html")).await {
            return ([(header::CONTENT_TYPE, "text/html; charset=utf-8")], body).into_response();
        }
    }
    Html("<!doctype html><title>adjustsat</title><p>Session service is running. Connect to <code>/ws</code>.</p>\n")
        .into_response()
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("wav") => "audio/wav",
        _ => "application/octet-stream",
    }
}

async fn ui_file(State(s): State<AppState>, UrlPath(path): UrlPath<String>) -> Response {
    let Some(dir) = &s.config.ui_dir else {
        return StatusCode::NOT_FOUND.into_response();
    };
    let rel = Path::new(&path);
    if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return StatusCode::NOT_FOUND.into_response();
    }
    match tokio::fs::read(dir.join(rel)).await {
        Ok(body) => ([(header::CONTENT_TYPE, content_type(rel))], body).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}

async fn media(State(s): State<AppState>, UrlPath((item, file)): UrlPath<(String, String)>) -> Response {
    let known = s
        .config
        .playlist
        .entries()
        .iter()
        .find(|e| e.id == item)
        .is_some_and(|e| e.offsets.iter().any(|&o| version_file_name(o) == file));
    if !known {
        return StatusCode::NOT_FOUND.into_response();
    }
    match tokio::fs::read(s.config.cache.item_dir(&item).join(&file)).await {
        Ok(body) => ([(header::CONTENT_TYPE, "audio/wav")], body).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(s): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, s))
}

async fn connection(socket: WebSocket, s: AppState) {
    let conn = s.next_conn.fetch_add(1, Ordering::Relaxed);
    let (out_tx, mut out_rx) = mpsc::unbounded_channel::<ServerMessage>();
    if s
        .commands
        .send(Command::Connect {
            conn,
            out: out_tx.clone(),
        })
        .await
        .is_err()
    {
        return;
    }
    let (mut sink, mut stream) = socket.split();
    let writer = tokio::spawn(async move {
        while let Some(msg) = out_rx.recv().await {
            let text = serde_json::to_string(&msg).expect("server message serializes");
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
    });
    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t,
            Message::Close(_) => break,
            _ => continue,
        };
        let cmd = match serde_json::from_str::<ClientMessage>(&text) {
            Ok(ClientMessage::Hello { pid }) => Command::Hello { conn, pid },
            Ok(ClientMessage::Event { event }) => Command::Event { conn, event },
            Err(e) => {
                let _ = out_tx.send(ServerMessage::Error {
                    message: format!("bad message: {e}"),
                });
                continue;
            }
        };
        if s.commands.send(cmd).await.is_err() {
            break;
        }
    }
    drop(out_tx);
    let _ = s.commands.send(Command::Disconnect { conn }).await;
    let _ = writer.await;
}

enum Command {
    Connect {
        conn: u64,
        out: mpsc::UnboundedSender<ServerMessage>,
    },
    Hello {
        conn: u64,
        pid: String,
    },
    Event {
        conn: u64,
        event: SessionEvent,
    },
    Disconnect {
        conn: u64,
    },
    GraceExpired {
        generation: u64,
    },
}

/// Tells the consumer whether the client has to switch media.
#[derive(Debug, Default)]
struct ClientSink {
    position_ms: u64,
    switched: bool,
}

impl AudioSink for ClientSink {
    fn play(&mut self, _version_id: &str, from_ms: u64) {
        self.position_ms = from_ms;
        self.switched = true;
    }

    fn pause(&mut self) {}

    fn resume(&mut self) {}

    fn position(&self) -> u64 {
        self.position_ms
    }
}

struct Active {
    runner: SessionRunner<ClientSink, BufWriter<File>>,
    pid: String,
    clock: Instant,
    last_t: u64,
    owner: Option<u64>,
    /// The service paused playback when the owner dropped.
    auto_paused: bool,
    generation: u64,
}

impl Active {
    fn stamp(&mut self) -> u64 {
        self.last_t = self.last_t.max(self.clock.elapsed().as_millis() as u64);
        self.last_t
    }
}

struct Consumer {
    config: Arc<ServeConfig>,
    commands: mpsc::Sender<Command>,
    conns: HashMap<u64, mpsc::UnboundedSender<ServerMessage>>,
    active: Option<Active>,
}

fn valid_pid(pid: &str) -> bool {
    !pid.is_empty()
        && pid.len() <= 64
        && pid.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl Consumer {
    async fn run(mut self, mut rx: mpsc::Receiver<Command>) {
        while let Some(cmd) = rx.recv().await {
            match cmd {
                Command::Connect { conn, out } => {
                    self.conns.insert(conn, out);
                }
                Command::Hello { conn, pid } => self.hello(conn, pid),
                Command::Event { conn, event } => self.event(conn, event),
                Command::Disconnect { conn } => self.disconnect(conn),
                Command::GraceExpired { generation } => self.grace_expired(generation),
            }
        }
    }

    fn send(&self, conn: u64, msg: ServerMessage) {
        if let Some(out) = self.conns.get(&conn) {
            let _ = out.send(msg);
        }
    }

    fn error(&self, conn: u64, message: impl Into<String>) {
        self.send(conn, ServerMessage::Error { message: message.into() });
    }

    fn owns_session(&self, conn: u64) -> bool {
        self.active.as_ref().is_some_and(|a| a.owner == Some(conn))
    }

    fn hello(&mut self, conn: u64, pid: String) {
        if self.owns_session(conn) {
            return self.error(conn, "already joined");
        }
        match &self.active {
            None => {
                if let Err(e) = self.start(conn, &pid) {
                    return self.error(conn, e);
                }
            }
            Some(a) if a.pid == pid && a.owner.is_none() => {
                tracing::info!(%pid, "participant reconnected");
                let a = self.active.as_mut().expect("checked");
                a.owner = Some(conn);
                if a.auto_paused {
                    a.auto_paused = false;
                    let t = a.stamp();
                    if let Err(e) = a.runner.apply(&SessionEvent::pause_toggle(t)) {
                        tracing::error!("resume after reconnect: {e}");
                    }
                }
            }
            Some(_) => {
                return self.send(
                    conn,
                    ServerMessage::Busy {
                        message: "another session is running".into(),
                    },
                )
            }
        }
        self.push_audio(conn);
        self.push_view(conn);
    }

    fn start(&mut self, conn: u64, pid: &str) -> Result<(), String> {
        if !valid_pid(pid) {
            return Err(format!("participant id {pid:?} must be 1-64 letters, digits, '-' or '_'"));
        }
        let state = start_session(pid, self.config.playlist.clone(), &self.config.cache).map_err(|e| e.to_string())?;
        let start_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64);
        let dir = self.config.results_dir.join(SESSIONS_DIR);
        fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        let path = dir.join(format!("{pid}-{start_ms}.jsonl"));
        let file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        let header = LogHeader::new(pid, &self.config.playlist, start_ms);
        let log = EventLogWriter::new(BufWriter::new(file), &header).map_err(|e| format!("{}: {e}", path.display()))?;
        tracing::info!(%pid, log = %path.display(), "session started");
        self.active = Some(Active {
            runner: SessionRunner::new(state, ClientSink::default(), Some(log)),
            pid: pid.to_string(),
            clock: Instant::now(),
            last_t: 0,
            owner: Some(conn),
            auto_paused: false,
            generation: 0,
        });
        Ok(())
    }

    fn event(&mut self, conn: u64, mut event: SessionEvent) {
        if !self.owns_session(conn) {
            return self.error(conn, "no session; send hello first");
        }
        let a = self.active.as_mut().expect("owned");
        event.t_ms = a.stamp();
        a.runner.sink_mut().switched = false;
        match a.runner.apply(&event) {
            Ok(_) => {}
            Err(RunnerError::Session(e)) => return self.error(conn, e.to_string()),
            Err(RunnerError::Log(e)) => {
                tracing::error!("event log write failed: {e}");
                return self.error(conn, format!("event log: {e}"));
            }
        }
        if a.runner.sink().switched {
            self.push_audio(conn);
        }
        self.push_view(conn);
        if self.active.as_ref().is_some_and(|a| a.runner.state().phase() == Phase::Done) {
            self.complete();
        }
    }

    fn push_view(&self, conn: u64) {
        if let Some(a) = &self.active {
            self.send(
                conn,
                ServerMessage::View {
                    view: current_trial_view(a.runner.state()),
                },
            );
        }
    }

    fn push_audio(&self, conn: u64) {
        let Some(snap) = self.active.as_ref().and_then(|a| a.runner.state().playback()) else {
            return;
        };
        self.send(
            conn,
            ServerMessage::Audio {
                url: format!("/media/{}", snap.version_id),
                item_id: snap.item_id,
                offset: snap.offset,
                position_ms: snap.playhead_ms,
                paused: snap.paused,
            },
        );
    }

    fn complete(&mut self) {
        let a = self.active.take().expect("active session");
        match finalize(a.runner.state()) {
            Ok(results) => match self.append_results(RESULTS_FILE, &results) {
                Ok(path) => tracing::info!(pid = %a.pid, rows = results.len(), results = %path.display(), "session complete"),
                Err(e) => tracing::error!(pid = %a.pid, "writing results failed: {e}"),
            },
            Err(e) => tracing::error!(pid = %a.pid, "finalize: {e}"),
        }
    }

    fn disconnect(&mut self, conn: u64) {
        self.conns.remove(&conn);
        if !self.owns_session(conn) {
            return;
        }
        let grace = self.config.reconnect_grace;
        let a = self.active.as_mut().expect("owned");
        a.owner = None;
        a.generation += 1;
        if !a.runner.state().is_paused() {
            let t = a.stamp();
            match a.runner.apply(&SessionEvent::pause_toggle(t)) {
                Ok(_) => a.auto_paused = true,
                Err(e) => tracing::error!("pause on disconnect: {e}"),
            }
        }
        tracing::warn!(pid = %a.pid, grace_secs = grace.as_secs_f64(), "participant disconnected; session paused");
        let generation = a.generation;
        let tx = self.commands.clone();
        tokio::spawn(async move {
            tokio::time::sleep(grace).await;
            let _ = tx.send(Command::GraceExpired { generation }).await;
        });
    }

    fn grace_expired(&mut self, generation: u64) {
        let expired = self
            .active
            .as_ref()
            .is_some_and(|a| a.owner.is_none() && a.generation == generation);
        if !expired {
            return;
        }
        let a = self.active.take().expect("checked");
        let partial = a.runner.state().results().to_vec();
        tracing::warn!(pid = %a.pid, confirmed = partial.len(), "reconnect grace expired; session closed incomplete");
        if let Err(e) = self.append_results(INCOMPLETE_RESULTS_FILE, &partial) {
            tracing::error!("writing incomplete results failed: {e}");
        }
    }

    fn append_results(&self, name: &str, results: &[TrialResult]) -> Result<PathBuf, String> {
        let path = self.config.results_dir.join(name);
        fs::create_dir_all(&self.config.results_dir).map_err(|e| e.to_string())?;
        let fresh = fs::metadata(&path).map_or(true, |m| m.len() == 0);
        let mut buf = Vec::new();
        write_results_csv(&mut buf, results, fresh).map_err(|e| e.to_string())?;
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        file.write_all(&buf).map_err(|e| format!("{}: {e}", path.display()))?;
        file.sync_data().map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(path)
    }
}
