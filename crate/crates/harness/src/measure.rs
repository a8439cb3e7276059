//! Loudness report for a single WAV file.

use std::fmt;
use std::path::{Path, PathBuf};

use adjustsat_core::audio::{read_wav, AudioError};
use adjustsat_core::loudness::{integrated_loudness, LoudnessError, LoudnessReading};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("cannot read {path}: {source}")]
    UnreadableFile {
        path: PathBuf,
        #[source]
        source: AudioError,
    },
    #[error("{path}: {source}")]
    Loudness {
        path: PathBuf,
        #[source]
        source: LoudnessError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureReport {
    pub path: PathBuf,
    pub reading: LoudnessReading,
    pub sample_rate: u32,
    pub channels: usize,
    pub frames: usize,
    pub peak_dbfs: f64,
}

pub fn measure(path: &Path) -> Result<MeasureReport, MeasureError> {
    let clip = read_wav(path).map_err(|source| MeasureError::UnreadableFile {
        path: path.to_path_buf(),
        source,
    })?;
    let reading = integrated_loudness(&clip).map_err(|source| MeasureError::Loudness {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(MeasureReport {
        path: path.to_path_buf(),
        reading,
        sample_rate: clip.sample_rate(),
        channels: clip.channel_count(),
        frames: clip.frames(),
        peak_dbfs: 20.0 * clip.peak().log10(),
    })
}

impl fmt::Display for MeasureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.reading)?;
        writeln!(f, "  file:        {}", self.path.display())?;
        writeln!(f, "  sample rate: {} Hz", self.sample_rate)?;
        writeln!(f, "  channels:    {}", self.channels)?;
        writeln!(
            f,
            "  duration:    {:.3} s ({} frames)",
            self.frames as f64 / self.sample_rate as f64,
            self.frames
        )?;
        if self.peak_dbfs.is_finite() {
            writeln!(f, "  peak:        {:.1} dBFS", self.peak_dbfs)?;
        } else {
            writeln!(f, "  peak:        silent")?;
        }
        if let LoudnessReading::Gated { blocks, .. } = self.reading {
            writeln!(f, "  gated blocks: {blocks}")?;
        }
        Ok(())
    }
}
