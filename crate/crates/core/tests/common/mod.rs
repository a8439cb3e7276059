#![allow(dead_code)]

use std::f64::consts::PI;

use adjustsat_core::audio::AudioClip;
use rand::{Rng, SeedableRng};

pub fn db(v: f64) -> f64 {
    10f64.powf(v / 20.0)
}

pub fn sine(rate: u32, freq: f64, amp: f64, secs: f64) -> Vec<f64> {
    let n = (rate as f64 * secs).round() as usize;
    (0..n)
        .map(|i| amp * (2.0 * PI * freq * i as f64 / rate as f64).sin())
        .collect()
}

/// Same sine in both channels.
pub fn stereo_tone(rate: u32, freq: f64, dbfs: f64, secs: f64) -> AudioClip {
    let s = sine(rate, freq, db(dbfs), secs);
    AudioClip::new(rate, vec![s.clone(), s]).unwrap()
}

/// Seeded uniform white noise, independent per channel.
pub fn noise(rate: u32, channels: usize, amp: f64, secs: f64, seed: u64) -> AudioClip {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let n = (rate as f64 * secs).round() as usize;
    let chans = (0..channels)
        .map(|_| (0..n).map(|_| rng.gen_range(-amp..amp)).collect())
        .collect();
    AudioClip::new(rate, chans).unwrap()
}

/// Reference meter for 48 kHz input: tabulated K-weighting coefficients in
/// direct form I, every block summed from scratch, then both gates.
pub fn oracle_loudness_48k(channels: &[Vec<f64>]) -> Option<f64> {
    let b1 = [1.535_124_859_586_97, -2.691_696_189_406_38, 1.198_392_810_852_85];
    let a1 = [-1.690_659_293_182_41, 0.732_480_774_215_85];
    let b2 = [1.0, -2.0, 1.0];
    let a2 = [-1.990_047_454_833_98, 0.990_072_250_366_21];
    let df1 = |x: &[f64], b: [f64; 3], a: [f64; 2]| {
        let mut y = vec![0.0; x.len()];
        for n in 0..x.len() {
            let xm1 = if n >= 1 { x[n - 1] } else { 0.0 };
            let xm2 = if n >= 2 { x[n - 2] } else { 0.0 };
            let ym1 = if n >= 1 { y[n - 1] } else { 0.0 };
            let ym2 = if n >= 2 { y[n - 2] } else { 0.0 };
            y[n] = b[0] * x[n] + b[1] * xm1 + b[2] * xm2 - a[0] * ym1 - a[1] * ym2;
        }
        y
    };
    let weights = [1.0, 1.0, 1.0, 1.41, 1.41];
    let filtered: Vec<Vec<f64>> = channels
        .iter()
        .map(|c| df1(&df1(c, b1, a1), b2, a2))
        .collect();
    let len = channels[0].len();
    let (block, step) = (19200, 4800);
    let mut blocks = Vec::new();
    let mut start = 0;
    while start + block <= len {
        let mut p = 0.0;
        for (w, c) in weights.iter().zip(&filtered) {
            p += w * c[start..start + block].iter().map(|v| v * v).sum::<f64>() / block as f64;
        }
        blocks.push(p);
        start += step;
    }
    let l = |p: f64| -0.691 + 10.0 * p.log10();
    let abs: Vec<f64> = blocks.into_iter().filter(|&p| l(p) > -70.0).collect();
    if abs.is_empty() {
        return None;
    }
    let rel = l(abs.iter().sum::<f64>() / abs.len() as f64) - 10.0;
    let kept: Vec<f64> = abs.into_iter().filter(|&p| l(p) > rel).collect();
    Some(l(kept.iter().sum::<f64>() / kept.len() as f64))
}

/// Magnitude (dB) of the tabulated 48 kHz K-weighting cascade at `freq`.
pub fn k_weight_db_48k(freq: f64) -> f64 {
    let w = 2.0 * PI * freq / 48000.0;
    let mag2 = |b: [f64; 3], a: [f64; 3]| {
        let eval = |c: [f64; 3]| {
            let re = c[0] + c[1] * w.cos() + c[2] * (2.0 * w).cos();
            let im = -c[1] * w.sin() - c[2] * (2.0 * w).sin();
            re * re + im * im
        };
        eval(b) / eval(a)
    };
    let shelf = mag2(
        [1.535_124_859_586_97, -2.691_696_189_406_38, 1.198_392_810_852_85],
        [1.0, -1.690_659_293_182_41, 0.732_480_774_215_85],
    );
    let hp = mag2([1.0, -2.0, 1.0], [1.0, -1.990_047_454_833_98, 0.990_072_250_366_21]);
    10.0 * (shelf * hp).log10()
}

/// Steady-state loudness of a sine of peak level `dbfs` in `channels`
/// equally weighted channels.
pub fn tone_loudness(freq: f64, dbfs: f64, channels: usize) -> f64 {
    -0.691 + 10.0 * (channels as f64 * db(dbfs).powi(2) / 2.0).log10() + k_weight_db_48k(freq)
}
