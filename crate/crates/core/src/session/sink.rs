//! Audio sink contract and the single-writer session runner.

use std::io::Write;
use std::sync::{Arc, RwLock};

use super::event::SessionEvent;
use super::log::EventLogWriter;
use super::state::{PlaybackSnapshot, SessionError, SessionState, Transition};

/// Playback back-end. Implementations switch sources at their next block
/// boundary and keep the position given to `play`.
pub trait AudioSink {
    fn play(&mut self, version_id: &str, from_ms: u64);
    fn pause(&mut self);
    fn resume(&mut self);
    fn position(&self) -> u64;
}

/// A sink without audio that advances a simulated clock.
#[derive(Debug, Clone, Default)]
pub struct HeadlessSink {
    version: Option<String>,
    position_ms: u64,
    paused: bool,
    /// Every `play` call, in order.
    pub history: Vec<(String, u64)>,
}

impl HeadlessSink {
    pub fn new() -> Self {
        Self::default()
    }

    /// Moves the simulated clock forward; the position only advances while playing.
    pub fn advance(&mut self, ms: u64) {
        if self.version.is_some() && !self.paused {
            self.position_ms += ms;
        }
    }

    pub fn current_version(&self) -> Option<&str> {
        self.version.as_deref()
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }
}

impl AudioSink for HeadlessSink {
    fn play(&mut self, version_id: &str, from_ms: u64) {
        self.version = Some(version_id.to_string());
        self.position_ms = from_ms;
        self.history.push((version_id.to_string(), from_ms));
    }

    fn pause(&mut self) {
        self.paused = true;
    }

    fn resume(&mut self) {
        self.paused = false;
    }

    fn position(&self) -> u64 {
        self.position_ms
    }
}

/// Latest playback snapshot, replaced atomically after each transition.
#[derive(Debug, Clone, Default)]
pub struct SnapshotCell(Arc<RwLock<Option<PlaybackSnapshot>>>);

impl SnapshotCell {
    pub fn get(&self) -> Option<PlaybackSnapshot> {
        self.0.read().expect("snapshot lock").clone()
    }

    fn publish(&self, snap: Option<PlaybackSnapshot>) {
        *self.0.write().expect("snapshot lock") = snap;
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("event log: {0}")]
    Log(#[from] std::io::Error),
}

/// Owns one session: applies events in order, appends accepted ones to the
/// log, drives the sink, and publishes the playback snapshot.
pub struct SessionRunner<S: AudioSink, W: Write> {
    state: SessionState,
    sink: S,
    log: Option<EventLogWriter<W>>,
    snapshot: SnapshotCell,
}

impl<S: AudioSink, W: Write> SessionRunner<S, W> {
    pub fn new(state: SessionState, mut sink: S, log: Option<EventLogWriter<W>>) -> Self {
        let snapshot = SnapshotCell::default();
        if let Some(snap) = state.playback() {
            sink.play(&snap.version_id, snap.playhead_ms);
            if snap.paused {
                sink.pause();
            }
        }
        snapshot.publish(state.playback());
        SessionRunner {
            state,
            sink,
            log,
            snapshot,
        }
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn sink(&self) -> &S {
        &self.sink
    }

    pub fn sink_mut(&mut self) -> &mut S {
        &mut self.sink
    }

    pub fn snapshot(&self) -> SnapshotCell {
        self.snapshot.clone()
    }

    pub fn apply(&mut self, event: &SessionEvent) -> Result<Transition, RunnerError> {
        let transition = self.state.handle_event(event)?;
        if let Some(log) = &mut self.log {
            log.append(event)?;
        }
        let old = self.state.playback();
        let new = transition.state.playback();
        match (&old, &new) {
            (_, None) => self.sink.pause(),
            (Some(o), Some(n)) if o.version_id == n.version_id && o.item_id == n.item_id => {
                if o.paused != n.paused {
                    if n.paused {
                        self.sink.pause()
                    } else {
                        self.sink.resume()
                    }
                }
            }
            (_, Some(n)) => {
                self.sink.play(&n.version_id, n.playhead_ms);
                if n.paused {
                    self.sink.pause()
                } else {
                    self.sink.resume()
                }
            }
        }
        self.state = transition.state.clone();
        self.snapshot.publish(new);
        Ok(transition)
    }

    pub fn into_parts(self) -> (SessionState, S, Option<EventLogWriter<W>>) {
        (self.state, self.sink, self.log)
    }
}
