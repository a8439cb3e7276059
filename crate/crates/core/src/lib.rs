//! Toolkit for dialogue-enhancement listening tests: loudness metering,
//! LU-stepped stimulus rendering, the adjustment/satisfaction session engine,
//! and the statistics behind its reports.

pub mod analysis;
pub mod audio;
pub mod loudness;
pub mod session;
pub mod stimulus;

pub use audio::{AudioClip, AudioError};
pub use loudness::{integrated_loudness, LoudnessReading};
