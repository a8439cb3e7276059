//! Leakage-model dialogue separation on a stem pair.

use std::fmt;
use std::path::{Path, PathBuf};

use adjustsat_core::audio::{read_wav, write_wav, WavEncoding};
use adjustsat_core::stimulus::{
    compute_ld, max_achievable_ld, LdGrid, LeakageModel, Separation, StemPair, StimulusError,
};

#[derive(Debug, thiserror::Error)]
pub enum SimulateError {
    #[error(transparent)]
    Stimulus(#[from] StimulusError),
    #[error("cannot create {path}: {source}")]
    OutDir {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateReport {
    pub fg_est: PathBuf,
    pub bg_est: PathBuf,
    pub leakage_db: Option<f64>,
    pub grid: LdGrid,
    /// `Err` holds why the value could not be measured.
    pub default_ld: Result<f64, String>,
    pub ceiling: Result<f64, String>,
    pub clean_ceiling: Result<f64, String>,
}

/// Writes `fg_est.wav` and `bg_est.wav` (24-bit) to `out_dir` and measures
/// the LD reachable at the grid's lowest offset with and without leakage.
pub fn simulate_ds(
    fg: &Path,
    bg: &Path,
    leakage_db: f64,
    grid: &LdGrid,
    target_lufs: f64,
    out_dir: &Path,
) -> Result<SimulateReport, SimulateError> {
    let read = |p: &Path| {
        read_wav(p).map_err(|source| StimulusError::StemFile {
            item: "simulate-ds".into(),
            path: p.to_path_buf(),
            source,
        })
    };
    let stems = StemPair::new(read(fg)?, read(bg)?).map_err(StimulusError::from)?;
    let model = LeakageModel::new(leakage_db)?;
    let sep = Separation::new(stems.clone(), model);
    std::fs::create_dir_all(out_dir).map_err(|source| SimulateError::OutDir {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let fg_est = out_dir.join("fg_est.wav");
    let bg_est = out_dir.join("bg_est.wav");
    write_wav(&fg_est, sep.estimate().fg(), WavEncoding::Pcm24).map_err(StimulusError::from)?;
    write_wav(&bg_est, sep.estimate().bg(), WavEncoding::Pcm24).map_err(StimulusError::from)?;

    let text = |r: Result<f64, StimulusError>| r.map_err(|e| e.to_string());
    let clean = Separation::new(stems.clone(), LeakageModel::disabled());
    Ok(SimulateReport {
        fg_est,
        bg_est,
        leakage_db: model.leakage_db(),
        grid: grid.clone(),
        default_ld: text(compute_ld(&stems)),
        ceiling: text(max_achievable_ld(&sep, grid, target_lufs)),
        clean_ceiling: text(max_achievable_ld(&clean, grid, target_lufs)),
    })
}

impl fmt::Display for SimulateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lu = |r: &Result<f64, String>| match r {
            Ok(v) => format!("{v:.1} LU"),
            Err(e) => format!("n/a ({e})"),
        };
        match self.leakage_db {
            Some(db) => writeln!(f, "leakage:          {db} dB")?,
            None => writeln!(f, "leakage:          disabled")?,
        }
        writeln!(f, "grid:             {} ({} versions)", self.grid, self.grid.len())?;
        writeln!(f, "default LD:       {}", lu(&self.default_ld))?;
        writeln!(f, "DS ceiling:       {}", lu(&self.ceiling))?;
        writeln!(f, "leakage-free:     {}", lu(&self.clean_ceiling))?;
        writeln!(f, "wrote {}", self.fg_est.display())?;
        writeln!(f, "wrote {}", self.bg_est.display())
    }
}
