//! Background-offset grids in the `from:step:to;from:step:to` notation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("malformed grid segment {segment:?}: {reason}")]
    MalformedSpec { segment: String, reason: String },
    #[error("segment {index} starts at {from} which does not lie below the previous end {prev_to}")]
    NonMonotonic {
        index: usize,
        from: f64,
        prev_to: f64,
    },
    #[error("grid does not contain the default offset 0")]
    MissingDefault,
}

/// One `from:step:to` run, expanded inclusively from `from` down to `to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSegment {
    pub from: f64,
    pub step: f64,
    pub to: f64,
}

impl GridSegment {
    fn count(&self) -> usize {
        ((self.from - self.to) / self.step).round() as usize + 1
    }
}

/// Rounds away accumulated binary error so offsets compare exactly.
fn snap(v: f64) -> f64 {
    let r = (v * 1e9).round() / 1e9;
    // no negative zero
    r + 0.0
}

/// Strictly descending background offsets in LU; always contains 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LdGrid {
    segments: Vec<GridSegment>,
    offsets: Vec<f64>,
}

impl LdGrid {
    pub fn parse(spec: &str) -> Result<Self, GridError> {
        let mut segments = Vec::new();
        for raw in spec.split(';') {
            segments.push(parse_segment(raw.trim())?);
        }
        Self::from_segments(segments)
    }

    pub fn from_segments(segments: Vec<GridSegment>) -> Result<Self, GridError> {
        let mut offsets: Vec<f64> = Vec::new();
        for (index, seg) in segments.iter().enumerate() {
            if let Some(&prev_to) = offsets.last() {
                if snap(seg.from) >= prev_to {
                    return Err(GridError::NonMonotonic {
                        index,
                        from: seg.from,
                        prev_to,
                    });
                }
            }
            offsets.extend((0..seg.count()).map(|k| snap(seg.from - k as f64 * seg.step)));
        }
        if !offsets.contains(&0.0) {
            return Err(GridError::MissingDefault);
        }
        Ok(LdGrid { segments, offsets })
    }

    pub fn segments(&self) -> &[GridSegment] {
        &self.segments
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Largest minus smallest offset.
    pub fn span(&self) -> f64 {
        snap(self.offsets[0] - self.offsets[self.offsets.len() - 1])
    }

    /// Most negative offset (strongest background attenuation).
    pub fn min_offset(&self) -> f64 {
        self.offsets[self.offsets.len() - 1]
    }

    pub fn max_offset(&self) -> f64 {
        self.offsets[0]
    }

    /// Position of offset 0.
    pub fn default_index(&self) -> usize {
        self.index_of(0.0).expect("grid invariant: contains 0")
    }

    pub fn index_of(&self, offset: f64) -> Option<usize> {
        self.offsets.iter().position(|&o| (o - offset).abs() < 1e-6)
    }
}

fn parse_segment(raw: &str) -> Result<GridSegment, GridError> {
    let malformed = |reason: &str| GridError::MalformedSpec {
        segment: raw.to_string(),
        reason: reason.to_string(),
    };
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 3 {
        return Err(malformed("expected from:step:to"));
    }
    let num = |s: &str| -> Result<f64, GridError> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| malformed(&format!("{s:?} is not a number")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(malformed("non-finite value"))
        }
    };
    let (from, step, to) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    if step <= 0.0 {
        return Err(malformed("step must be positive"));
    }
    if from <= to {
        return Err(malformed("from must exceed to"));
    }
    let steps = (from - to) / step;
    if (steps - steps.round()).abs() > 1e-6 {
        return Err(malformed("step does not divide the segment"));
    }
    Ok(GridSegment { from, step, to })
}

fn fmt_signed(v: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let v = snap(v);
    if v > 0.0 {
        write!(f, "+{v}")
    } else {
        write!(f, "{v}")
    }
}

impl fmt::Display for LdGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, seg) in self.segments.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            fmt_signed(seg.from, f)?;
            write!(f, ":{}:", snap(seg.step))?;
            fmt_signed(seg.to, f)?;
        }
        Ok(())
    }
}

impl FromStr for LdGrid {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LdGrid::parse(s)
    }
}

impl Serialize for LdGrid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LdGrid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        LdGrid::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Grid used for the broadcast-drama items: +12 to -40 LU.
pub const WDR_GRID: &str = "+12:1:-15;-16:2:-40";
/// Grid used for the AR items: +9.6 to -20 LU.
pub const AR_GRID: &str = "+9.6:0.2:0;-0.8:0.8:-20";
