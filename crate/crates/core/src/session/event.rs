use serde::{Deserialize, Serialize};

/// Which of the two versions is audible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AbSelection {
    /// Default version (offset 0).
    A,
    /// Personalized version at the current knob position.
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EventKind {
    /// Master volume, set once before adjusting starts.
    VolumeSet { level: f64 },
    /// Rotary knob turned by signed detents.
    KnobDelta { detents: i32 },
    PressKnob,
    SelectVersion { version: AbSelection },
    PauseToggle,
}

/// One participant input, stamped in ms since session start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub t_ms: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl SessionEvent {
    pub fn new(t_ms: u64, kind: EventKind) -> Self {
        SessionEvent { t_ms, kind }
    }

    pub fn knob(t_ms: u64, detents: i32) -> Self {
        Self::new(t_ms, EventKind::KnobDelta { detents })
    }

    pub fn press(t_ms: u64) -> Self {
        Self::new(t_ms, EventKind::PressKnob)
    }

    pub fn select(t_ms: u64, version: AbSelection) -> Self {
        Self::new(t_ms, EventKind::SelectVersion { version })
    }

    pub fn pause_toggle(t_ms: u64) -> Self {
        Self::new(t_ms, EventKind::PauseToggle)
    }

    pub fn volume(t_ms: u64, level: f64) -> Self {
        Self::new(t_ms, EventKind::VolumeSet { level })
    }
}
