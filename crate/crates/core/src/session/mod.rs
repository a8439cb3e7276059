//! Event-sourced adjustment/satisfaction test sessions.

mod event;
mod log;
mod scale;
pub mod script;
mod sink;
mod state;

pub use event::{AbSelection, EventKind, SessionEvent};
pub use log::{
    read_log, recover_results, replay, EventLogWriter, LogError, LogHeader, ReplayError,
    TOOLKIT_VERSION,
};
pub use scale::{Locale, SatisfactionLabel, SAME_AS, SCALE_MAX, SCALE_MIN};
pub use sink::{AudioSink, HeadlessSink, RunnerError, SessionRunner, SnapshotCell};
pub use state::{
    current_trial_view, finalize, start_session, AssumeAvailable, Outcome, Phase,
    PlaybackSnapshot, Playlist, SatisfactionView, SessionError, SessionState, TrialItem,
    TrialResult, TrialView, Transition, VersionAvailability, COMPLETION_MESSAGE,
};
