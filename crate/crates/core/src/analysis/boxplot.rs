//! Five-number summaries with two outlier classes.

use serde::Serialize;

use super::AnalysisError;

/// Box-plot statistics of one sample.
///
/// Values more than 1.5 IQR beyond a quartile are outliers; up to 3 IQR they
/// are "near" (crosses), past that "far" (circles).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxStats {
    pub n: usize,
    pub mean: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub iqr: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    /// Ascending.
    pub outliers_near: Vec<f64>,
    /// Ascending.
    pub outliers_far: Vec<f64>,
}

/// Which of the three regions a value falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutlierClass {
    Inside,
    Near,
    Far,
}

/// Quantile of an ascending sample, interpolating linearly at position
/// `(n - 1) * p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn box_stats(values: &[f64]) -> Result<BoxStats, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let q1 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;

    let mut stats = BoxStats {
        n,
        mean,
        q1,
        median,
        q3,
        iqr,
        whisker_lo: f64::INFINITY,
        whisker_hi: f64::NEG_INFINITY,
        outliers_near: Vec::new(),
        outliers_far: Vec::new(),
    };
    for &v in &sorted {
        match stats.classify(v) {
            OutlierClass::Inside => {
                stats.whisker_lo = stats.whisker_lo.min(v);
                stats.whisker_hi = stats.whisker_hi.max(v);
            }
            OutlierClass::Near => stats.outliers_near.push(v),
            OutlierClass::Far => stats.outliers_far.push(v),
        }
    }
    Ok(stats)
}

impl BoxStats {
    pub fn classify(&self, v: f64) -> OutlierClass {
        let beyond = if v < self.q1 {
            self.q1 - v
        } else if v > self.q3 {
            v - self.q3
        } else {
            0.0
        };
        if beyond <= 1.5 * self.iqr {
            OutlierClass::Inside
        } else if beyond <= 3.0 * self.iqr {
            OutlierClass::Near
        } else {
            OutlierClass::Far
        }
    }

    pub fn outlier_count(&self) -> usize {
        self.outliers_near.len() + self.outliers_far.len()
    }
}
