//! Gated integrated loudness (ITU-R BS.1770-4) and gain normalization.
//!
//! The meter K-weights every channel (high-shelf followed by a high-pass),
//! computes the channel-weighted mean square over 400 ms blocks advanced by
//! 100 ms, and averages the blocks that survive the absolute gate at
//! -70 LUFS and the relative gate 10 LU below the absolute-gated mean.
//! A trailing block shorter than 400 ms is discarded.
//!
//! Filter coefficients are derived from the analog prototypes for the
//! clip's own sample rate; at 48 kHz they reproduce the tabulated values.

use std::f64::consts::PI;

use thiserror::Error;

use crate::audio::AudioClip;

/// Offset in the block loudness formula.
pub const LOUDNESS_OFFSET: f64 = -0.691;
pub const ABSOLUTE_GATE_LUFS: f64 = -70.0;
pub const RELATIVE_GATE_LU: f64 = -10.0;
pub const BLOCK_SECS: f64 = 0.4;
pub const STEP_SECS: f64 = 0.1;

/// Per-channel weights for L, R, C, Ls, Rs.
const CHANNEL_WEIGHTS: [f64; 5] = [1.0, 1.0, 1.0, 1.41, 1.41];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoudnessError {
    #[error("clip is {secs:.3} s long, shorter than one 400 ms block")]
    TooShort { secs: f64 },
    #[error("{0} channels exceed the weighted channel set (at most 5)")]
    UnsupportedLayout(usize),
    #[error("reading is below the absolute gate")]
    Unmeasurable,
}

/// Result of an integrated-loudness measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoudnessReading {
    /// Gated loudness in LUFS and the number of blocks that passed both gates.
    Gated { lufs: f64, blocks: usize },
    /// No block passed the absolute gate.
    BelowGate,
}

impl LoudnessReading {
    pub fn lufs(&self) -> Option<f64> {
        match *self {
            LoudnessReading::Gated { lufs, .. } => Some(lufs),
            LoudnessReading::BelowGate => None,
        }
    }

    pub fn gated_block_count(&self) -> usize {
        match *self {
            LoudnessReading::Gated { blocks, .. } => blocks,
            LoudnessReading::BelowGate => 0,
        }
    }

    pub fn is_below_gate(&self) -> bool {
        matches!(self, LoudnessReading::BelowGate)
    }
}

impl std::fmt::Display for LoudnessReading {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LoudnessReading::Gated { lufs, .. } => write!(f, "{lufs:.1} LUFS"),
            LoudnessReading::BelowGate => f.write_str("below gate"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    /// Runs the filter over `input` (transposed direct form II, zero initial state).
    fn run(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.reserve(input.len());
        let (mut s1, mut s2) = (0.0, 0.0);
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        for &x in input {
            let y = b0 * x + s1;
            s1 = b1 * x - a1 * y + s2;
            s2 = b2 * x - a2 * y;
            out.push(y);
        }
    }
}

/// The two K-weighting stages for a given sample rate.
#[derive(Debug, Clone, Copy)]
pub struct KWeighting {
    shelf: Biquad,
    highpass: Biquad,
}

impl KWeighting {
    pub fn new(sample_rate: f64) -> Self {
        // High-shelf prototype: centre frequency, gain (dB) and Q of the
        // head-related pre-filter.
        let f0 = 1681.974_450_955_533;
        let gain_db = 3.999_843_853_973_347;
        let q = 0.707_175_236_955_419_6;
        let k = (PI * f0 / sample_rate).tan();
        let vh = 10f64.powf(gain_db / 20.0);
        let vb = vh.powf(0.499_666_774_154_541_6);
        let a0 = 1.0 + k / q + k * k;
        let shelf = Biquad {
            b: [
                (vh + vb * k / q + k * k) / a0,
                2.0 * (k * k - vh) / a0,
                (vh - vb * k / q + k * k) / a0,
            ],
            a: [2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0],
        };

        // Second-order high-pass (RLB weighting).
        let f0 = 38.135_470_876_024_44;
        let q = 0.500_327_037_323_877_3;
        let k = (PI * f0 / sample_rate).tan();
        let a0 = 1.0 + k / q + k * k;
        let highpass = Biquad {
            b: [1.0, -2.0, 1.0],
            a: [2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0],
        };
        KWeighting { shelf, highpass }
    }

    /// K-weights one channel.
    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let mut tmp = Vec::new();
        let mut out = Vec::new();
        self.shelf.run(input, &mut tmp);
        self.highpass.run(&tmp, &mut out);
        out
    }

    /// Numerator and denominator coefficients of both stages, `(b, a)` with `a[0] = 1`.
    pub fn coefficients(&self) -> [([f64; 3], [f64; 3]); 2] {
        let full = |q: &Biquad| (q.b, [1.0, q.a[0], q.a[1]]);
        [full(&self.shelf), full(&self.highpass)]
    }
}

/// Block geometry in samples for a sample rate.
pub fn block_geometry(sample_rate: u32) -> (usize, usize) {
    let fs = sample_rate as f64;
    ((fs * BLOCK_SECS).round() as usize, (fs * STEP_SECS).round() as usize)
}

/// Channel-weighted mean square of every complete 400 ms block.
///
/// Each entry is `Σ_i G_i · z_i` for one block; block loudness is
/// `LOUDNESS_OFFSET + 10·log10(entry)`.
pub fn block_powers(clip: &AudioClip) -> Result<Vec<f64>, LoudnessError> {
    let n_channels = clip.channel_count();
    if n_channels > CHANNEL_WEIGHTS.len() {
        return Err(LoudnessError::UnsupportedLayout(n_channels));
    }
    let (block, step) = block_geometry(clip.sample_rate());
    let frames = clip.frames();
    if frames < block {
        return Err(LoudnessError::TooShort {
            secs: clip.duration_secs(),
        });
    }
    let n_blocks = (frames - block) / step + 1;
    let filter = KWeighting::new(clip.sample_rate() as f64);

    let mut powers = vec![0.0; n_blocks];
    for (weight, samples) in CHANNEL_WEIGHTS.iter().zip(clip.channels()) {
        let filtered = filter.apply(samples);
        // Squared energy per 100 ms hop, then blocks as sums of hops where
        // the geometry allows it; otherwise sum each block directly.
        let per_channel: Vec<f64> = if block == 4 * step {
            let hops: Vec<f64> = filtered
                .chunks(step)
                .map(|c| c.iter().map(|s| s * s).sum())
                .collect();
            (0..n_blocks)
                .map(|j| (hops[j] + hops[j + 1]) + (hops[j + 2] + hops[j + 3]))
                .collect()
        } else {
            (0..n_blocks)
                .map(|j| filtered[j * step..j * step + block].iter().map(|s| s * s).sum())
                .collect()
        };
        for (p, e) in powers.iter_mut().zip(per_channel) {
            *p += weight * e / block as f64;
        }
    }
    Ok(powers)
}

pub fn block_loudness(power: f64) -> f64 {
    LOUDNESS_OFFSET + 10.0 * power.log10()
}

/// Indices of the blocks that pass both gates, in ascending order.
pub fn gated_blocks(powers: &[f64]) -> Vec<usize> {
    let above_abs: Vec<usize> = (0..powers.len())
        .filter(|&j| block_loudness(powers[j]) > ABSOLUTE_GATE_LUFS)
        .collect();
    if above_abs.is_empty() {
        return above_abs;
    }
    let mean = above_abs.iter().map(|&j| powers[j]).sum::<f64>() / above_abs.len() as f64;
    let relative = block_loudness(mean) + RELATIVE_GATE_LU;
    above_abs
        .into_iter()
        .filter(|&j| block_loudness(powers[j]) > relative)
        .collect()
}

/// Gated integrated loudness of `clip`.
pub fn integrated_loudness(clip: &AudioClip) -> Result<LoudnessReading, LoudnessError> {
    let powers = block_powers(clip)?;
    let selected = gated_blocks(&powers);
    if selected.is_empty() {
        return Ok(LoudnessReading::BelowGate);
    }
    let mean = selected.iter().map(|&j| powers[j]).sum::<f64>() / selected.len() as f64;
    Ok(LoudnessReading::Gated {
        lufs: block_loudness(mean),
        blocks: selected.len(),
    })
}

/// Loudness of `clip` averaged over an externally chosen block set
/// (for example the gated blocks of a mix the clip is part of).
///
/// Returns `None` if the set is empty or the clip has no energy there.
pub fn loudness_over_blocks(
    clip: &AudioClip,
    blocks: &[usize],
) -> Result<Option<f64>, LoudnessError> {
    let powers = block_powers(clip)?;
    if blocks.is_empty() {
        return Ok(None);
    }
    let mean = blocks.iter().map(|&j| powers[j]).sum::<f64>() / blocks.len() as f64;
    Ok((mean > 0.0).then(|| block_loudness(mean)))
}

/// Gain in dB that moves `reading` onto `target_lufs`.
pub fn gain_to_target(reading: LoudnessReading, target_lufs: f64) -> Result<f64, LoudnessError> {
    reading
        .lufs()
        .map(|lufs| target_lufs - lufs)
        .ok_or(LoudnessError::Unmeasurable)
}

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Scales every sample by `10^(gain_db/20)`. Never clips.
///
/// # Panics
///
/// Panics if `gain_db` is not finite.
pub fn apply_gain(clip: &AudioClip, gain_db: f64) -> AudioClip {
    assert!(gain_db.is_finite(), "gain must be finite, got {gain_db}");
    if gain_db == 0.0 {
        return clip.clone();
    }
    let g = db_to_amplitude(gain_db);
    clip.map(|s| s * g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(rate: u32, freq: f64, amp: f64, secs: f64) -> Vec<f64> {
        let n = (rate as f64 * secs) as usize;
        (0..n)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / rate as f64).sin())
            .collect()
    }

    #[test]
    fn coefficients_match_48k_table() {
        // Tabulated 48 kHz values.
        let [(b1, a1), (b2, a2)] = KWeighting::new(48000.0).coefficients();
        let tb1 = [1.535_124_859_586_97, -2.691_696_189_406_38, 1.198_392_810_852_85];
        let ta1 = [1.0, -1.690_659_293_182_41, 0.732_480_774_215_85];
        let ta2 = [1.0, -1.990_047_454_833_98, 0.990_072_250_366_21];
        for i in 0..3 {
            assert!((b1[i] - tb1[i]).abs() < 1e-10, "b1[{i}]");
            assert!((a1[i] - ta1[i]).abs() < 1e-10, "a1[{i}]");
            assert!((a2[i] - ta2[i]).abs() < 1e-8, "a2[{i}]");
        }
        assert_eq!(b2, [1.0, -2.0, 1.0]);
    }

    #[test]
    fn too_short_and_unsupported_layout() {
        let clip = AudioClip::new(48000, vec![vec![0.1; 19199]]).unwrap();
        assert!(matches!(
            integrated_loudness(&clip),
            Err(LoudnessError::TooShort { .. })
        ));
        let clip = AudioClip::new(48000, vec![vec![0.1; 19200]; 6]).unwrap();
        assert_eq!(
            integrated_loudness(&clip),
            Err(LoudnessError::UnsupportedLayout(6))
        );
    }

    #[test]
    fn block_count_discards_partial_tail() {
        // 1.05 s at 48 kHz: blocks start every 4800 samples, 19200 long.
        let clip = AudioClip::new(48000, vec![vec![0.1; 50400]]).unwrap();
        assert_eq!(block_powers(&clip).unwrap().len(), 7);
    }

    #[test]
    fn silence_is_below_gate() {
        let clip = AudioClip::silence(48000, 2, 48000 * 5).unwrap();
        let r = integrated_loudness(&clip).unwrap();
        assert!(r.is_below_gate());
        assert_eq!(r.gated_block_count(), 0);
        assert_eq!(r.to_string(), "below gate");
    }

    #[test]
    fn stereo_tone_reference_level() {
        let amp = db_to_amplitude(-23.0);
        let s = sine(48000, 997.0, amp, 10.0);
        let clip = AudioClip::new(48000, vec![s.clone(), s]).unwrap();
        let lufs = integrated_loudness(&clip).unwrap().lufs().unwrap();
        assert!((lufs + 23.0).abs() < 0.1, "{lufs}");
    }

    #[test]
    fn gain_to_target_examples() {
        let r = |lufs| LoudnessReading::Gated { lufs, blocks: 1 };
        assert_eq!(gain_to_target(r(-20.0), -23.0).unwrap(), -3.0);
        assert_eq!(gain_to_target(r(-23.0), -23.0).unwrap(), 0.0);
        assert_eq!(gain_to_target(r(-30.5), -23.0).unwrap(), 7.5);
        assert_eq!(
            gain_to_target(LoudnessReading::BelowGate, -23.0),
            Err(LoudnessError::Unmeasurable)
        );
    }

    #[test]
    fn apply_gain_examples() {
        let clip = AudioClip::new(8000, vec![sine(8000, 100.0, 0.5, 0.1)]).unwrap();
        assert_eq!(apply_gain(&clip, 0.0), clip);
        let doubled = apply_gain(&clip, 20.0 * 2f64.log10());
        let peak_in = clip.peak();
        assert!((doubled.peak() - 2.0 * peak_in).abs() < 1e-6);
        let tiny = apply_gain(&clip, -120.0);
        for (a, b) in clip.channel(0).iter().zip(tiny.channel(0)) {
            assert!((a * 1e-6 - b).abs() < 1e-18);
        }
    }

    #[test]
    fn apply_gain_may_exceed_full_scale() {
        let clip = AudioClip::new(8000, vec![vec![0.9; 10]]).unwrap();
        assert!(apply_gain(&clip, 6.0).peak() > 1.0);
    }

    #[test]
    #[should_panic]
    fn apply_gain_rejects_infinite() {
        let clip = AudioClip::new(8000, vec![vec![0.9; 10]]).unwrap();
        apply_gain(&clip, f64::NEG_INFINITY);
    }

    #[test]
    fn odd_sample_rate_uses_direct_block_sums() {
        // 11025 Hz: 1102.5 samples per hop, so blocks are not four hops.
        let (block, step) = block_geometry(11025);
        assert_ne!(block, 4 * step);
        let s = sine(11025, 997.0, db_to_amplitude(-20.0), 3.0);
        let clip = AudioClip::new(11025, vec![s]).unwrap();
        let lufs = integrated_loudness(&clip).unwrap().lufs().unwrap();
        // mono: -20 dB peak -> -23.01 dB mean square, K gain at 997 Hz ~ +0.69.
        assert!((lufs + 23.01).abs() < 0.1, "{lufs}");
    }
}
