//! The adjustment/satisfaction state machine.
//!
//! Every trial runs an adjust step (the knob moves through the item's grid)
//! followed by an assess step (the knob moves the satisfaction rating). The
//! first playlist entry is a training item; its adjust step is the
//! `Training` phase and its rating is never reported.
//!
//! Transitions are pure: [`SessionState::handle_event`] returns a new state
//! and leaves the receiver untouched, also on error.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::event::{AbSelection, EventKind, SessionEvent};
use super::scale::{SatisfactionLabel, SAME_AS, SCALE_MAX};
use crate::stimulus::{round_lu, version_file_name, DeMethod, ItemSpec, ProdType};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("participant id is empty")]
    EmptyParticipantId,
    #[error("playlist is empty")]
    EmptyPlaylist,
    #[error("item {item} is missing {missing} cached versions")]
    MissingVersions { item: String, missing: usize },
    #[error("item {item} has an invalid grid or duration")]
    InvalidItem { item: String },
    #[error("volume is locked once set or once adjusting has started")]
    VolumeChangeLocked,
    #[error("volume level {0} is not finite")]
    InvalidVolume(f64),
    #[error("event at {t_ms} ms precedes the previous event at {last_ms} ms")]
    OutOfOrder { t_ms: u64, last_ms: u64 },
    #[error("session is already done")]
    SessionDone,
    #[error("session is not done")]
    SessionIncomplete,
}

/// What the session needs to know about one playlist item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialItem {
    pub id: String,
    pub label: String,
    pub de_method: DeMethod,
    pub prod_type: ProdType,
    pub default_ld: f64,
    /// Grid offsets in LU, strictly descending, containing 0.
    pub offsets: Vec<f64>,
    /// Length of the item audio; playback loops at the end.
    pub duration_ms: u64,
}

impl TrialItem {
    pub fn from_spec(spec: &ItemSpec, duration_ms: u64) -> Self {
        TrialItem {
            id: spec.id.clone(),
            label: spec.label.clone(),
            de_method: spec.de_method,
            prod_type: spec.prod_type,
            default_ld: spec.default_ld,
            offsets: spec.grid.offsets().to_vec(),
            duration_ms,
        }
    }

    pub fn default_index(&self) -> usize {
        self.offsets
            .iter()
            .position(|&o| o == 0.0)
            .expect("trial item invariant: grid contains 0")
    }

    fn validate(&self) -> Result<(), SessionError> {
        let descending = self.offsets.windows(2).all(|w| w[0] > w[1]);
        if !descending || !self.offsets.contains(&0.0) || self.duration_ms == 0 {
            return Err(SessionError::InvalidItem {
                item: self.id.clone(),
            });
        }
        Ok(())
    }
}

/// Fixed item order; entry 0 is the training item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Playlist {
    entries: Vec<TrialItem>,
}

impl Playlist {
    pub fn new(entries: Vec<TrialItem>) -> Result<Self, SessionError> {
        if entries.is_empty() {
            return Err(SessionError::EmptyPlaylist);
        }
        for e in &entries {
            e.validate()?;
        }
        Ok(Playlist { entries })
    }

    pub fn entries(&self) -> &[TrialItem] {
        &self.entries
    }

    pub fn training(&self) -> &TrialItem {
        &self.entries[0]
    }

    /// Items that produce results (everything after the training entry).
    pub fn scored(&self) -> &[TrialItem] {
        &self.entries[1..]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("playlist serializes");
        hex::encode(Sha256::digest(json))
    }
}

/// Checks that the rendered versions of an item are available.
pub trait VersionAvailability {
    /// Number of grid versions of `item` that are missing.
    fn missing_versions(&self, item: &TrialItem) -> usize;
}

impl VersionAvailability for crate::stimulus::VersionCache {
    fn missing_versions(&self, item: &TrialItem) -> usize {
        let index = match self.index(&item.id) {
            Ok(Some(index)) => index,
            _ => return item.offsets.len(),
        };
        item.offsets
            .iter()
            .filter(|&&o| {
                index.entry(o).is_none() || !self.version_path(&item.id, o).is_file()
            })
            .count()
    }
}

/// Treats every version as present; for tests and dry runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct AssumeAvailable;

impl VersionAvailability for AssumeAvailable {
    fn missing_versions(&self, _: &TrialItem) -> usize {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Training,
    Adjust,
    Assess,
    Done,
}

/// One confirmed, non-training trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub participant_id: String,
    /// 1-based position among the scored items.
    pub item_number: u32,
    pub item_id: String,
    pub item_label: String,
    pub de_method: DeMethod,
    pub prod_type: ProdType,
    pub chosen_offset: f64,
    /// `default_ld − chosen_offset`.
    pub chosen_ld: f64,
    pub satisfaction_value: u8,
    pub satisfaction_label: SatisfactionLabel,
    /// False when the rating is below "The same as".
    pub valid: bool,
}

impl TrialResult {
    pub fn default_ld(&self) -> f64 {
        round_lu(self.chosen_ld + self.chosen_offset)
    }
}

/// Whether an accepted event changed anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Applied,
    /// Recorded, but meaningless in the current phase or position.
    Ignored,
}

#[derive(Debug, Clone)]
pub struct Transition {
    pub state: SessionState,
    pub outcome: Outcome,
    /// Set when the event confirmed a scored trial.
    pub result: Option<TrialResult>,
}

/// What the audio sink should be playing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaybackSnapshot {
    pub item_id: String,
    pub offset: f64,
    /// `<item_id>/<version file>`, e.g. `wdr1_oo/v-4.0.wav`.
    pub version_id: String,
    pub playhead_ms: u64,
    pub paused: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    participant_id: String,
    playlist: Arc<Playlist>,
    phase: Phase,
    item_index: usize,
    offset_index: usize,
    ab_selection: AbSelection,
    satisfaction: u8,
    playhead_ms: u64,
    paused: bool,
    volume: Option<f64>,
    volume_locked: bool,
    last_event_ms: u64,
    results: Vec<TrialResult>,
}

/// Opens a session in the training phase.
pub fn start_session(
    participant_id: &str,
    playlist: Arc<Playlist>,
    versions: &impl VersionAvailability,
) -> Result<SessionState, SessionError> {
    if participant_id.trim().is_empty() {
        return Err(SessionError::EmptyParticipantId);
    }
    for item in playlist.entries() {
        let missing = versions.missing_versions(item);
        if missing > 0 {
            return Err(SessionError::MissingVersions {
                item: item.id.clone(),
                missing,
            });
        }
    }
    let offset_index = playlist.training().default_index();
    Ok(SessionState {
        participant_id: participant_id.to_string(),
        playlist,
        phase: Phase::Training,
        item_index: 0,
        offset_index,
        ab_selection: AbSelection::A,
        satisfaction: SAME_AS,
        playhead_ms: 0,
        paused: false,
        volume: None,
        volume_locked: false,
        last_event_ms: 0,
        results: Vec::new(),
    })
}

impl SessionState {
    pub fn participant_id(&self) -> &str {
        &self.participant_id
    }

    pub fn playlist(&self) -> &Arc<Playlist> {
        &self.playlist
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn item_index(&self) -> usize {
        self.item_index
    }

    pub fn offset_index(&self) -> usize {
        self.offset_index
    }

    pub fn ab_selection(&self) -> AbSelection {
        self.ab_selection
    }

    pub fn satisfaction(&self) -> u8 {
        self.satisfaction
    }

    pub fn playhead_ms(&self) -> u64 {
        self.playhead_ms
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn volume(&self) -> Option<f64> {
        self.volume
    }

    pub fn is_volume_locked(&self) -> bool {
        self.volume_locked
    }

    pub fn results(&self) -> &[TrialResult] {
        &self.results
    }

    pub fn current_item(&self) -> &TrialItem {
        let idx = self.item_index.min(self.playlist.len() - 1);
        &self.playlist.entries()[idx]
    }

    /// Offset of the personalized version at the current knob position.
    pub fn current_offset(&self) -> f64 {
        self.current_item().offsets[self.offset_index]
    }

    /// Offset of the version that is audible right now.
    pub fn audible_offset(&self) -> f64 {
        match self.ab_selection {
            AbSelection::A => 0.0,
            AbSelection::B => self.current_offset(),
        }
    }

    pub fn playback(&self) -> Option<PlaybackSnapshot> {
        if self.phase == Phase::Done {
            return None;
        }
        let item = self.current_item();
        let offset = self.audible_offset();
        Some(PlaybackSnapshot {
            item_id: item.id.clone(),
            offset,
            version_id: format!("{}/{}", item.id, version_file_name(offset)),
            playhead_ms: self.playhead_ms,
            paused: self.paused,
        })
    }

    /// Applies one event. Rejected events leave no trace.
    pub fn handle_event(&self, event: &SessionEvent) -> Result<Transition, SessionError> {
        if self.phase == Phase::Done {
            return Err(SessionError::SessionDone);
        }
        if event.t_ms < self.last_event_ms {
            return Err(SessionError::OutOfOrder {
                t_ms: event.t_ms,
                last_ms: self.last_event_ms,
            });
        }
        let mut next = self.clone();
        next.advance_clock(event.t_ms);
        let before = next.clone();
        let mut result = None;

        match event.kind {
            EventKind::VolumeSet { level } => {
                if self.volume_locked {
                    return Err(SessionError::VolumeChangeLocked);
                }
                if !level.is_finite() {
                    return Err(SessionError::InvalidVolume(level));
                }
                next.volume = Some(level);
                next.volume_locked = true;
            }
            EventKind::KnobDelta { detents } => {
                next.volume_locked = true;
                match next.phase {
                    Phase::Training | Phase::Adjust => {
                        let last = next.current_item().offsets.len() as i64 - 1;
                        let idx = (next.offset_index as i64 + detents as i64).clamp(0, last);
                        next.offset_index = idx as usize;
                        next.ab_selection = AbSelection::B;
                    }
                    Phase::Assess => {
                        let v = (next.satisfaction as i64 + detents as i64).clamp(0, SCALE_MAX as i64);
                        next.satisfaction = v as u8;
                    }
                    Phase::Done => unreachable!(),
                }
            }
            EventKind::PressKnob => match next.phase {
                Phase::Training | Phase::Adjust => {
                    next.phase = Phase::Assess;
                    next.satisfaction = SAME_AS;
                }
                Phase::Assess => {
                    if next.item_index > 0 {
                        let r = next.trial_result();
                        next.results.push(r.clone());
                        result = Some(r);
                    }
                    next.item_index += 1;
                    if next.item_index >= next.playlist.len() {
                        next.phase = Phase::Done;
                    } else {
                        next.phase = Phase::Adjust;
                        next.offset_index = next.current_item().default_index();
                        next.ab_selection = AbSelection::A;
                        next.satisfaction = SAME_AS;
                        next.playhead_ms = 0;
                    }
                }
                Phase::Done => unreachable!(),
            },
            EventKind::SelectVersion { version } => next.ab_selection = version,
            EventKind::PauseToggle => next.paused = !next.paused,
        }

        let outcome = if next == before {
            Outcome::Ignored
        } else {
            Outcome::Applied
        };
        Ok(Transition {
            state: next,
            outcome,
            result,
        })
    }

    fn advance_clock(&mut self, t_ms: u64) {
        let dt = t_ms - self.last_event_ms;
        self.last_event_ms = t_ms;
        if !self.paused {
            let duration = self.current_item().duration_ms;
            self.playhead_ms = (self.playhead_ms + dt) % duration;
        }
    }

    fn trial_result(&self) -> TrialResult {
        let item = self.current_item();
        let chosen_offset = self.current_offset();
        TrialResult {
            participant_id: self.participant_id.clone(),
            item_number: self.item_index as u32,
            item_id: item.id.clone(),
            item_label: item.label.clone(),
            de_method: item.de_method,
            prod_type: item.prod_type,
            chosen_offset,
            chosen_ld: round_lu(item.default_ld - chosen_offset),
            satisfaction_value: self.satisfaction,
            satisfaction_label: SatisfactionLabel::for_value(self.satisfaction),
            valid: self.satisfaction >= SAME_AS,
        }
    }
}

/// Results of a finished session, in playlist order.
pub fn finalize(state: &SessionState) -> Result<Vec<TrialResult>, SessionError> {
    if state.phase != Phase::Done {
        return Err(SessionError::SessionIncomplete);
    }
    Ok(state.results.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionView {
    pub position: u8,
    pub label: SatisfactionLabel,
}

/// Everything the participant-facing UI shows. Never contains LU values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialView {
    pub phase: Phase,
    /// 1-based scored item number; 0 during training.
    pub item_number: u32,
    pub item_total: u32,
    /// "3 / 16", or "Training".
    pub counter: String,
    pub active_version: AbSelection,
    /// Knob detents away from the default position.
    pub knob_steps: i64,
    pub satisfaction: Option<SatisfactionView>,
    pub paused: bool,
    pub message: Option<String>,
}

pub const COMPLETION_MESSAGE: &str = "Vielen Dank!";

pub fn current_trial_view(state: &SessionState) -> TrialView {
    let total = state.playlist.scored().len() as u32;
    let done = state.phase == Phase::Done;
    let item_number = if done { total } else { state.item_index as u32 };
    let counter = if !done && state.item_index == 0 {
        "Training".to_string()
    } else {
        format!("{item_number} / {total}")
    };
    let knob_steps = if done {
        0
    } else {
        state.offset_index as i64 - state.current_item().default_index() as i64
    };
    TrialView {
        phase: state.phase,
        item_number,
        item_total: total,
        counter,
        active_version: state.ab_selection,
        knob_steps,
        satisfaction: (state.phase == Phase::Assess).then(|| SatisfactionView {
            position: state.satisfaction,
            label: SatisfactionLabel::for_value(state.satisfaction),
        }),
        paused: state.paused,
        message: done.then(|| COMPLETION_MESSAGE.to_string()),
    }
}
