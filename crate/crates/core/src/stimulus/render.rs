//! Loudness difference measurement and LU-stepped version rendering.

use rayon::prelude::*;

use super::{ItemSpec, StimulusError};
use crate::audio::{AudioClip, AudioError};
use crate::loudness::{
    self, apply_gain, block_powers, db_to_amplitude, gated_blocks, integrated_loudness,
    loudness_over_blocks,
};

/// Maximum deviation of a rendered version from its target loudness.
pub const LEVEL_TOLERANCE_LU: f64 = 0.2;

/// Speech (foreground) and everything else (background), equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct StemPair {
    fg: AudioClip,
    bg: AudioClip,
}

impl StemPair {
    /// Pairs two stems, zero-padding the shorter one at the tail.
    pub fn new(fg: AudioClip, bg: AudioClip) -> Result<Self, AudioError> {
        fg.check_compatible(&bg)?;
        let frames = fg.frames().max(bg.frames());
        Ok(StemPair {
            fg: fg.padded_to(frames),
            bg: bg.padded_to(frames),
        })
    }

    pub fn fg(&self) -> &AudioClip {
        &self.fg
    }

    pub fn bg(&self) -> &AudioClip {
        &self.bg
    }

    pub fn sample_rate(&self) -> u32 {
        self.fg.sample_rate()
    }

    pub fn duration_secs(&self) -> f64 {
        self.fg.duration_secs()
    }

    /// `fg + 10^(offset/20)·bg`, sample-wise.
    pub fn mix(&self, offset_lu: f64) -> AudioClip {
        self.fg
            .mix_scaled(1.0, &self.bg, db_to_amplitude(offset_lu))
            .expect("stem pair invariant: equal layout and length")
    }
}

/// Loudness difference fg − bg of isolated stems, in LU.
pub fn compute_ld(stems: &StemPair) -> Result<f64, StimulusError> {
    let measure = |clip: &AudioClip, stem: &'static str| {
        integrated_loudness(clip)?
            .lufs()
            .ok_or(StimulusError::UnmeasurableStem { stem })
    };
    Ok(measure(stems.fg(), "fg")? - measure(stems.bg(), "bg")?)
}

/// Loudness difference between two components of one mix, measured over the
/// blocks that pass the gates for the mix `fg_part + bg_part`.
///
/// Unlike [`compute_ld`] this stays defined when one component is far below
/// the absolute gate on its own, as long as the mix is audible.
pub fn ld_in_mix(fg_part: &AudioClip, bg_part: &AudioClip) -> Result<f64, StimulusError> {
    let mix = fg_part.mix_scaled(1.0, bg_part, 1.0)?;
    let blocks = gated_blocks(&block_powers(&mix)?);
    if blocks.is_empty() {
        return Err(StimulusError::UnmeasurableMix);
    }
    let fg = loudness_over_blocks(fg_part, &blocks)?.ok_or(StimulusError::UnmeasurableStem { stem: "fg" })?;
    let bg = loudness_over_blocks(bg_part, &blocks)?.ok_or(StimulusError::UnmeasurableStem { stem: "bg" })?;
    Ok(fg - bg)
}

/// A loudness-normalized mix at one background offset.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedVersion {
    pub audio: AudioClip,
    pub measured_lufs: f64,
    /// Normalization gain applied to the raw mix, in dB.
    pub gain_db: f64,
}

/// Mixes `fg` with the background shifted by `offset_lu` and normalizes the
/// mix to `target_lufs`.
pub fn render_version(
    stems: &StemPair,
    offset_lu: f64,
    target_lufs: f64,
) -> Result<RenderedVersion, StimulusError> {
    if !offset_lu.is_finite() {
        return Err(StimulusError::NonFiniteOffset(offset_lu));
    }
    let mix = stems.mix(offset_lu);
    let reading = integrated_loudness(&mix)?;
    let gain_db = loudness::gain_to_target(reading, target_lufs)
        .map_err(|_| StimulusError::UnmeasurableMix)?;
    let audio = apply_gain(&mix, gain_db);
    let measured_lufs = integrated_loudness(&audio)?
        .lufs()
        .ok_or(StimulusError::UnmeasurableMix)?;
    Ok(RenderedVersion {
        audio,
        measured_lufs,
        gain_db,
    })
}

/// Foreground and background as they appear inside the normalized version at
/// `offset_lu`.
pub fn version_components(
    stems: &StemPair,
    offset_lu: f64,
    target_lufs: f64,
) -> Result<(AudioClip, AudioClip), StimulusError> {
    let gain_db = render_version(stems, offset_lu, target_lufs)?.gain_db;
    let c = db_to_amplitude(gain_db);
    Ok((
        stems.fg().map(|s| s * c),
        stems.bg().map(|s| s * c * db_to_amplitude(offset_lu)),
    ))
}

/// One entry of a [`VersionSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Version {
    pub offset: f64,
    /// `default_ld − offset`.
    pub nominal_ld: f64,
    pub measured_lufs: f64,
    pub audio: AudioClip,
}

/// Every grid version of one item, in grid order (descending offset).
#[derive(Debug, Clone, PartialEq)]
pub struct VersionSet {
    pub item_id: String,
    pub target_lufs: f64,
    pub versions: Vec<Version>,
}

impl VersionSet {
    pub fn get(&self, offset: f64) -> Option<&Version> {
        self.versions.iter().find(|v| (v.offset - offset).abs() < 1e-6)
    }

    pub fn len(&self) -> usize {
        self.versions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.versions.is_empty()
    }

    /// Spread between the loudest and quietest version in LU.
    pub fn loudness_band(&self) -> f64 {
        let (lo, hi) = self
            .versions
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v.measured_lufs), hi.max(v.measured_lufs))
            });
        hi - lo
    }
}

/// Renders all grid versions of `item` from `stems`.
///
/// For dialogue-separation items `stems` are the separated estimates.
pub fn render_version_set(item: &ItemSpec, stems: &StemPair) -> Result<VersionSet, StimulusError> {
    let target = item.target_loudness;
    let versions = item
        .grid
        .offsets()
        .par_iter()
        .map(|&offset| {
            let annotate = |e: StimulusError| StimulusError::Version {
                offset,
                source: Box::new(e),
            };
            let r = render_version(stems, offset, target).map_err(annotate)?;
            if (r.measured_lufs - target).abs() > LEVEL_TOLERANCE_LU {
                return Err(annotate(StimulusError::Leveling {
                    measured: r.measured_lufs,
                    target,
                }));
            }
            Ok(Version {
                offset,
                nominal_ld: round_lu(item.default_ld - offset),
                measured_lufs: r.measured_lufs,
                audio: r.audio,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VersionSet {
        item_id: item.id.clone(),
        target_lufs: target,
        versions,
    })
}

/// Snaps an LU value to 1e-9 so sums of grid values print cleanly.
pub fn round_lu(v: f64) -> f64 {
    (v * 1e9).round() / 1e9 + 0.0
}
