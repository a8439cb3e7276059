//! Stand-in for dialogue separation: a static, broadband mutual-leakage model.
//!
//! The estimates are `fg_est = fg + g·bg` and `bg_est = bg + g·fg` with
//! `g = 10^(leakage/20)`. Because the model is linear, the true speech and
//! background content of any version rendered from the estimates is known:
//! at background offset gain `a` the mix is `(1 + a·g)·fg + (g + a)·bg`.

use super::render::{ld_in_mix, render_version, StemPair};
use super::{LdGrid, StimulusError};
use crate::audio::AudioClip;
use crate::loudness::db_to_amplitude;

/// Leakage level in dB (≤ 0); `None` disables leakage.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LeakageModel {
    leakage_db: Option<f64>,
}

impl LeakageModel {
    pub fn new(leakage_db: f64) -> Result<Self, StimulusError> {
        if leakage_db.is_nan() || leakage_db > 0.0 {
            return Err(StimulusError::PositiveLeakage(leakage_db));
        }
        // -inf means no leakage at all
        Ok(LeakageModel {
            leakage_db: leakage_db.is_finite().then_some(leakage_db),
        })
    }

    pub fn disabled() -> Self {
        LeakageModel { leakage_db: None }
    }

    pub fn leakage_db(&self) -> Option<f64> {
        self.leakage_db
    }

    /// Amplitude ratio `g`; zero when disabled.
    pub fn gain(&self) -> f64 {
        self.leakage_db.map_or(0.0, db_to_amplitude)
    }
}

/// Applies the leakage model to true stems.
pub fn simulate_ds(stems: &StemPair, model: &LeakageModel) -> StemPair {
    if model.leakage_db.is_none() {
        return stems.clone();
    }
    let g = model.gain();
    let fg_est = stems.fg().mix_scaled(1.0, stems.bg(), g);
    let bg_est = stems.bg().mix_scaled(1.0, stems.fg(), g);
    StemPair::new(
        fg_est.expect("stem pair invariant"),
        bg_est.expect("stem pair invariant"),
    )
    .expect("stem pair invariant")
}

/// True stems together with their simulated separation.
#[derive(Debug, Clone)]
pub struct Separation {
    sources: StemPair,
    model: LeakageModel,
    estimate: StemPair,
}

impl Separation {
    pub fn new(sources: StemPair, model: LeakageModel) -> Self {
        let estimate = simulate_ds(&sources, &model);
        Separation {
            sources,
            model,
            estimate,
        }
    }

    pub fn sources(&self) -> &StemPair {
        &self.sources
    }

    pub fn estimate(&self) -> &StemPair {
        &self.estimate
    }

    pub fn model(&self) -> &LeakageModel {
        &self.model
    }

    /// True speech and background content of the normalized version rendered
    /// from the estimates at `offset_lu`.
    pub fn content_components(
        &self,
        offset_lu: f64,
        target_lufs: f64,
    ) -> Result<(AudioClip, AudioClip), StimulusError> {
        let rendered = render_version(&self.estimate, offset_lu, target_lufs)?;
        let c = db_to_amplitude(rendered.gain_db);
        let a = db_to_amplitude(offset_lu);
        let g = self.model.gain();
        let fg_scale = c * (1.0 + a * g);
        let bg_scale = c * (g + a);
        Ok((
            self.sources.fg().map(|s| s * fg_scale),
            self.sources.bg().map(|s| s * bg_scale),
        ))
    }

    /// Speech-to-background loudness difference actually present in the
    /// version at `offset_lu`.
    pub fn effective_ld(&self, offset_lu: f64, target_lufs: f64) -> Result<f64, StimulusError> {
        let (fg, bg) = self.content_components(offset_lu, target_lufs)?;
        ld_in_mix(&fg, &bg)
    }
}

/// Effective LD of the version at the grid's strongest background attenuation.
pub fn max_achievable_ld(
    separation: &Separation,
    grid: &LdGrid,
    target_lufs: f64,
) -> Result<f64, StimulusError> {
    separation.effective_ld(grid.min_offset(), target_lufs)
}
