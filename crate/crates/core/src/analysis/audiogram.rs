//! Pure-tone audiograms and their better-ear summary.

use serde::Serialize;

use super::AnalysisError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Audiogram {
    participant_id: String,
    frequencies: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl Audiogram {
    /// Thresholds in dBHL, one per frequency; frequencies strictly ascending.
    pub fn new(
        participant_id: impl Into<String>,
        frequencies: Vec<f64>,
        left: Vec<f64>,
        right: Vec<f64>,
    ) -> Result<Self, AnalysisError> {
        let participant_id = participant_id.into();
        let invalid = |reason: &str| AnalysisError::InvalidAudiogram {
            pid: participant_id.clone(),
            reason: reason.to_string(),
        };
        if frequencies.is_empty() {
            return Err(invalid("no frequencies"));
        }
        if left.len() != frequencies.len() || right.len() != frequencies.len() {
            return Err(invalid("threshold count differs from frequency count"));
        }
        if frequencies.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return Err(invalid("frequencies must be positive"));
        }
        if frequencies.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("frequencies must be strictly ascending"));
        }
        if left.iter().chain(&right).any(|t| !t.is_finite()) {
            return Err(invalid("thresholds must be finite"));
        }
        Ok(Audiogram {
            participant_id,
            frequencies,
            left,
            right,
        })
    }

    pub fn participant_id(&self) -> &str {
        &self.participant_id
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn left(&self) -> &[f64] {
        &self.left
    }

    pub fn right(&self) -> &[f64] {
        &self.right
    }

    /// Lower (better) threshold of the two ears at each frequency.
    pub fn better_ear(&self) -> Vec<f64> {
        self.left.iter().zip(&self.right).map(|(l, r)| l.min(*r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AudiogramSummary {
    pub n: usize,
    pub frequencies: Vec<f64>,
    pub mean_better_ear: Vec<f64>,
    pub lower_envelope: Vec<f64>,
    pub upper_envelope: Vec<f64>,
}

pub fn audiogram_summary(audiograms: &[Audiogram]) -> Result<AudiogramSummary, AnalysisError> {
    let first = audiograms.first().ok_or(AnalysisError::EmptyInput)?;
    if let Some(a) = audiograms.iter().find(|a| a.frequencies != first.frequencies) {
        return Err(AnalysisError::FrequencyMismatch {
            pid: a.participant_id.clone(),
        });
    }
    let better: Vec<Vec<f64>> = audiograms.iter().map(Audiogram::better_ear).collect();
    let k = first.frequencies.len();
    let column = |i: usize| {
        let mut c: Vec<f64> = better.iter().map(|b| b[i]).collect();
        c.sort_by(f64::total_cmp);
        c
    };
    let mut summary = AudiogramSummary {
        n: audiograms.len(),
        frequencies: first.frequencies.clone(),
        mean_better_ear: Vec::with_capacity(k),
        lower_envelope: Vec::with_capacity(k),
        upper_envelope: Vec::with_capacity(k),
    };
    for i in 0..k {
        let c = column(i);
        summary.mean_better_ear.push(c.iter().sum::<f64>() / c.len() as f64);
        summary.lower_envelope.push(c[0]);
        summary.upper_envelope.push(c[c.len() - 1]);
    }
    Ok(summary)
}
