//! Synthetic participants: random but reproducible event streams.

use rand::Rng;

use super::event::{AbSelection, EventKind, SessionEvent};
use super::state::Playlist;

/// Random raw input for a whole session.
///
/// The stream may contain events a live session rejects (a second volume
/// change, for instance); it always ends with enough knob presses to finish
/// every trial, so the accepted subset completes the session.
pub fn random_session(playlist: &Playlist, rng: &mut impl Rng) -> Vec<SessionEvent> {
    let mut t = 0u64;
    let mut events = Vec::new();
    let mut tick = |rng: &mut dyn rand::RngCore| {
        t += rng.gen_range(0..1500);
        t
    };
    if rng.gen_bool(0.7) {
        let level = rng.gen_range(-40.0..0.0);
        events.push(SessionEvent::new(tick(rng), EventKind::VolumeSet { level }));
    }
    for item in playlist.entries() {
        let steps = item.offsets.len() as i32;
        for _ in 0..rng.gen_range(0..12) {
            let kind = random_kind(rng, steps);
            events.push(SessionEvent::new(tick(rng), kind));
        }
        events.push(SessionEvent::press(tick(rng)));
        for _ in 0..rng.gen_range(0..6) {
            let kind = random_kind(rng, 31);
            events.push(SessionEvent::new(tick(rng), kind));
        }
        events.push(SessionEvent::press(tick(rng)));
    }
    events
}

fn random_kind(rng: &mut impl Rng, span: i32) -> EventKind {
    match rng.gen_range(0..10) {
        0..=4 => EventKind::KnobDelta {
            detents: rng.gen_range(-span..=span),
        },
        5 | 6 => EventKind::SelectVersion {
            version: if rng.gen_bool(0.5) { AbSelection::A } else { AbSelection::B },
        },
        7 => EventKind::PauseToggle,
        8 => EventKind::VolumeSet {
            level: rng.gen_range(-40.0..0.0),
        },
        _ => EventKind::PressKnob,
    }
}

/// A deliberate participant: for each scored item turn the knob by
/// `detents[i]`, compare A/B once, then rate `ratings[i]` (scale position).
/// The training item is confirmed at its default.
pub fn planned_session(playlist: &Playlist, detents: &[i32], ratings: &[u8]) -> Vec<SessionEvent> {
    let mut t = 0;
    let mut next = || {
        t += 250;
        t
    };
    let mut events = vec![
        SessionEvent::volume(next(), -12.0),
        SessionEvent::press(next()),
        SessionEvent::press(next()),
    ];
    for (i, _) in playlist.scored().iter().enumerate() {
        let d = detents.get(i).copied().unwrap_or(0);
        if d != 0 {
            events.push(SessionEvent::knob(next(), d));
        }
        events.push(SessionEvent::select(next(), AbSelection::A));
        events.push(SessionEvent::select(next(), AbSelection::B));
        events.push(SessionEvent::press(next()));
        let r = ratings.get(i).copied().unwrap_or(super::SAME_AS) as i32;
        let delta = r - super::SAME_AS as i32;
        if delta != 0 {
            events.push(SessionEvent::knob(next(), delta));
        }
        events.push(SessionEvent::press(next()));
    }
    events
}
