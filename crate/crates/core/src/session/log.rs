//! Line-delimited JSON event logs and deterministic replay.
//!
//! The first line is a [`LogHeader`]; every following line is one accepted
//! [`SessionEvent`]. Rejected events are never written, so a well-formed
//! log always replays without error.

use std::io::{self, BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::event::SessionEvent;
use super::state::{start_session, AssumeAvailable, Phase, Playlist, SessionError, TrialResult};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub pid: String,
    pub playlist_hash: String,
    pub toolkit_version: String,
    pub session_start_unix_ms: u64,
}

impl LogHeader {
    pub fn new(pid: &str, playlist: &Playlist, session_start_unix_ms: u64) -> Self {
        LogHeader {
            pid: pid.to_string(),
            playlist_hash: playlist.hash(),
            toolkit_version: TOOLKIT_VERSION.to_string(),
            session_start_unix_ms,
        }
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("log has no header line")]
    MissingHeader,
}

/// Appends events to a log, flushing after every line.
pub struct EventLogWriter<W: Write> {
    out: W,
}

impl<W: Write> EventLogWriter<W> {
    pub fn new(mut out: W, header: &LogHeader) -> io::Result<Self> {
        serde_json::to_writer(&mut out, header)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(EventLogWriter { out })
    }

    /// Continues an existing log without writing a header.
    pub fn resume(out: W) -> Self {
        EventLogWriter { out }
    }

    pub fn append(&mut self, event: &SessionEvent) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, event)?;
        self.out.write_all(b"\n")?;
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub fn read_log(input: impl BufRead) -> Result<(LogHeader, Vec<SessionEvent>), LogError> {
    let mut lines = input.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => return Err(LogError::MissingHeader),
            Some((_, line)) if line.as_ref().is_ok_and(|l| l.trim().is_empty()) => continue,
            Some((i, line)) => {
                break serde_json::from_str(&line?)
                    .map_err(|source| LogError::Parse { line: i + 1, source })?
            }
        }
    };
    let mut events = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        events.push(
            serde_json::from_str(&line).map_err(|source| LogError::Parse { line: i + 1, source })?,
        );
    }
    Ok((header, events))
}

#[derive(Debug, Error, PartialEq)]
pub enum ReplayError {
    #[error("could not start session: {0}")]
    Start(SessionError),
    #[error("event {index} cannot be applied: {source}")]
    IllegalTransition {
        index: usize,
        #[source]
        source: SessionError,
    },
    #[error("log ends before the session is done ({confirmed} trials confirmed)")]
    IncompleteLog { confirmed: usize },
}

/// Drives a fresh session through `events`; the log must complete it.
pub fn replay(
    events: &[SessionEvent],
    pid: &str,
    playlist: Arc<Playlist>,
) -> Result<Vec<TrialResult>, ReplayError> {
    let mut state =
        start_session(pid, playlist, &AssumeAvailable).map_err(ReplayError::Start)?;
    for (index, event) in events.iter().enumerate() {
        state = state
            .handle_event(event)
            .map_err(|source| ReplayError::IllegalTransition { index, source })?
            .state;
    }
    if state.phase() != Phase::Done {
        return Err(ReplayError::IncompleteLog {
            confirmed: state.results().len(),
        });
    }
    Ok(state.results().to_vec())
}

/// Results of every trial confirmed before the log ends or breaks off.
pub fn recover_results(events: &[SessionEvent], pid: &str, playlist: Arc<Playlist>) -> Vec<TrialResult> {
    let Ok(mut state) = start_session(pid, playlist, &AssumeAvailable) else {
        return Vec::new();
    };
    for event in events {
        match state.handle_event(event) {
            Ok(t) => state = t.state,
            Err(_) => break,
        }
    }
    state.results().to_vec()
}
