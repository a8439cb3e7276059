#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use adjustsat::serve::{ClientMessage, ServerMessage};
use adjustsat_core::audio::{write_wav, AudioClip, WavEncoding};
use adjustsat_core::session::SessionEvent;
use adjustsat_core::stimulus::{compute_ld, StemPair, AR_GRID, WDR_GRID};
use futures::{SinkExt, StreamExt};
use serde_json::json;
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio_tungstenite::tungstenite::Message;

pub const FG_HZ: f64 = 1000.0;
pub const BG_HZ: f64 = 150.0;

pub fn tone(rate: u32, freq: f64, amp: f64, secs: f64, channels: usize) -> AudioClip {
    let n = (rate as f64 * secs).round() as usize;
    let ch: Vec<f64> = (0..n)
        .map(|i| amp * (2.0 * std::f64::consts::PI * freq * i as f64 / rate as f64).sin())
        .collect();
    AudioClip::new(rate, vec![ch; channels]).unwrap()
}

/// Stereo tone stems whose LD is `ld` (fg 1 kHz, bg 150 Hz).
pub fn tone_stems(rate: u32, secs: f64, ld: f64) -> StemPair {
    let fg = tone(rate, FG_HZ, 0.05, secs, 2);
    let bg = tone(rate, BG_HZ, 0.05, secs, 2);
    let measured = compute_ld(&StemPair::new(fg.clone(), bg.clone()).unwrap()).unwrap();
    let gain = 10f64.powf((measured - ld) / 20.0);
    StemPair::new(fg, bg.map(|s| s * gain)).unwrap()
}

pub const STUDY_DEFAULTS: [(&str, f64); 8] = [
    ("WDR1", 11.0),
    ("WDR2", 8.2),
    ("WDR3", 12.1),
    ("WDR4", 13.0),
    ("WDR5", 11.7),
    ("AR1", 4.0),
    ("AR2", 1.0),
    ("AR3", 6.0),
];

/// Item order of the test, after the training item.
pub const STUDY_ORDER: [(&str, &str, &[&str]); 16] = [
    ("WDR3", "OO", &["mVO", "music"]),
    ("AR2", "OO", &["mVO", "noise"]),
    ("WDR1", "DS", &["mVO", "noise"]),
    ("WDR4", "OO", &["mVO", "music"]),
    ("AR3", "OO", &["mVO", "noise"]),
    ("AR2", "DS", &["mVO", "noise"]),
    ("WDR2", "DS", &["mVO", "music"]),
    ("WDR3", "DS", &["mVO", "music"]),
    ("WDR5", "OO", &["fVO", "mVO", "music"]),
    ("AR1", "DS", &["fVO", "noise"]),
    ("WDR4", "DS", &["mVO", "music"]),
    ("WDR5", "DS", &["fVO", "mVO", "music"]),
    ("WDR2", "OO", &["mVO", "music"]),
    ("AR1", "OO", &["fVO", "noise"]),
    ("WDR1", "OO", &["mVO", "noise"]),
    ("AR3", "DS", &["mVO", "noise"]),
];

pub const TRAINING_LD: f64 = 10.0;

pub fn default_ld(label: &str) -> f64 {
    STUDY_DEFAULTS.iter().find(|(l, _)| *l == label).unwrap().1
}

pub fn item_id(label: &str, method: &str) -> String {
    format!("{}_{}", label.to_lowercase(), method.to_lowercase())
}

/// Writes stems for every label plus a training item and a manifest with
/// the 17-entry playlist. Returns the manifest path.
pub fn write_study_fixture(dir: &Path, rate: u32, secs: f64) -> PathBuf {
    let stems_dir = dir.join("stems");
    std::fs::create_dir_all(&stems_dir).unwrap();
    let write = |name: &str, ld: f64| {
        let s = tone_stems(rate, secs, ld);
        write_wav(stems_dir.join(format!("{name}_fg.wav")), s.fg(), WavEncoding::Float32).unwrap();
        write_wav(stems_dir.join(format!("{name}_bg.wav")), s.bg(), WavEncoding::Float32).unwrap();
    };
    write("training", TRAINING_LD);
    for (label, ld) in STUDY_DEFAULTS {
        write(label, ld);
    }
    let decl = |id: String, label: &str, stem: &str, method: &str, tags: &[&str], ld: f64| {
        let ar = label.starts_with("AR");
        json!({
            "id": id,
            "label": label,
            "de_method": method,
            "prod_type": if ar { "AR" } else { "WDR" },
            "content_tags": tags,
            "fg": format!("stems/{stem}_fg.wav"),
            "bg": format!("stems/{stem}_bg.wav"),
            "grid": if ar { AR_GRID } else { WDR_GRID },
            "default_ld": ld,
        })
    };
    let mut items = vec![decl("training".into(), "Training", "training", "OO", &["mVO", "noise"], TRAINING_LD)];
    let mut playlist = vec![json!({"item": "training", "training": true})];
    for (label, method, tags) in STUDY_ORDER {
        let id = item_id(label, method);
        items.push(decl(id.clone(), label, label, method, tags, default_ld(label)));
        playlist.push(json!(id));
    }
    let manifest = json!({
        "items": items,
        "playlist": playlist,
        "target_loudness": -23.0,
        "output_dir": "out",
    });
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
    path
}

pub fn adjustsat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adjustsat"))
        .args(args)
        .env_remove("ADJUSTSAT_RESULTS_DIR")
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub type Socket = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

pub async fn connect(addr: std::net::SocketAddr) -> Socket {
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
    ws
}

pub async fn send(ws: &mut Socket, msg: &ClientMessage) {
    ws.send(Message::Text(serde_json::to_string(msg).unwrap().into())).await.unwrap();
}

pub async fn recv(ws: &mut Socket) -> ServerMessage {
    loop {
        let msg = tokio::time::timeout(std::time::Duration::from_secs(10), ws.next())
            .await
            .expect("server answers")
            .expect("socket open")
            .unwrap();
        if let Message::Text(t) = msg {
            return serde_json::from_str(&t).unwrap();
        }
    }
}

/// Reads messages up to and including the next view or error.
pub async fn recv_reply(ws: &mut Socket) -> Vec<ServerMessage> {
    let mut out = Vec::new();
    loop {
        let m = recv(ws).await;
        let last = !matches!(m, ServerMessage::Audio { .. });
        out.push(m);
        if last {
            return out;
        }
    }
}

/// Tracks what a headless client would be playing.
#[derive(Debug, Default)]
pub struct HeadlessClient {
    pub playing: Option<String>,
    pub switches: usize,
    pub errors: Vec<String>,
    pub last_view: Option<adjustsat_core::session::TrialView>,
}

impl HeadlessClient {
    pub fn absorb(&mut self, msgs: Vec<ServerMessage>) {
        for m in msgs {
            match m {
                ServerMessage::Audio { url, .. } => {
                    self.playing = Some(url);
                    self.switches += 1;
                }
                ServerMessage::View { view } => self.last_view = Some(view),
                ServerMessage::Error { message } | ServerMessage::Busy { message } => self.errors.push(message),
            }
        }
    }
}

/// Runs `events` for `pid` over one connection, one reply per message.
pub async fn run_session(addr: std::net::SocketAddr, pid: &str, events: &[SessionEvent]) -> HeadlessClient {
    let mut ws = connect(addr).await;
    let mut client = HeadlessClient::default();
    send(&mut ws, &ClientMessage::Hello { pid: pid.into() }).await;
    client.absorb(recv_reply(&mut ws).await);
    for e in events {
        send(&mut ws, &ClientMessage::Event { event: *e }).await;
        client.absorb(recv_reply(&mut ws).await);
    }
    let _ = ws.close(None).await;
    client
}

/// Minimal HTTP GET; returns status and body.
pub async fn http_get(addr: std::net::SocketAddr, path: &str) -> (u16, Vec<u8>) {
    let mut s = tokio::net::TcpStream::connect(addr).await.unwrap();
    s.write_all(format!("GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").as_bytes())
        .await
        .unwrap();
    let mut buf = Vec::new();
    s.read_to_end(&mut buf).await.unwrap();
    let split = buf.windows(4).position(|w| w == b"\r\n\r\n").unwrap();
    let head = String::from_utf8_lossy(&buf[..split]).into_owned();
    let status = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    let mut body = buf[split + 4..].to_vec();
    if head.to_ascii_lowercase().contains("transfer-encoding: chunked") {
        body = dechunk(&body);
    }
    (status, body)
}

fn dechunk(mut b: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    loop {
        let eol = b.windows(2).position(|w| w == b"\r\n").unwrap();
        let n = usize::from_str_radix(std::str::from_utf8(&b[..eol]).unwrap().trim(), 16).unwrap();
        if n == 0 {
            return out;
        }
        out.extend_from_slice(&b[eol + 2..eol + 2 + n]);
        b = &b[eol + 4 + n..];
    }
}
