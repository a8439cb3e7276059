//! Command implementations behind the `adjustsat` binary.

pub mod analyze;
pub mod manifest;
pub mod measure;
pub mod prepare;
pub mod serve;
pub mod simulate;
