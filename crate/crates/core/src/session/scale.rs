//! The seven-label satisfaction scale on the integer range 0–30.

use std::fmt;

use serde::{Deserialize, Serialize};

pub const SCALE_MIN: u8 = 0;
pub const SCALE_MAX: u8 = 30;
/// Position of "The same as"; ratings below it invalidate a trial.
pub const SAME_AS: u8 = 15;
const ANCHOR_SPACING: u8 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SatisfactionLabel {
    #[serde(rename = "Much worse")]
    MuchWorse,
    #[serde(rename = "Worse")]
    Worse,
    #[serde(rename = "Slightly worse")]
    SlightlyWorse,
    #[serde(rename = "The same as")]
    SameAs,
    #[serde(rename = "Slightly better")]
    SlightlyBetter,
    #[serde(rename = "Better")]
    Better,
    #[serde(rename = "Much better")]
    MuchBetter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Locale {
    English,
    German,
}

impl SatisfactionLabel {
    pub const ALL: [SatisfactionLabel; 7] = [
        SatisfactionLabel::MuchWorse,
        SatisfactionLabel::Worse,
        SatisfactionLabel::SlightlyWorse,
        SatisfactionLabel::SameAs,
        SatisfactionLabel::SlightlyBetter,
        SatisfactionLabel::Better,
        SatisfactionLabel::MuchBetter,
    ];

    /// Scale position the label is anchored at.
    pub fn anchor(&self) -> u8 {
        *self as u8 * ANCHOR_SPACING
    }

    /// Label for a scale value: the nearest anchor, except that values below
    /// "The same as" never round up onto it.
    pub fn for_value(value: u8) -> Self {
        let value = value.min(SCALE_MAX);
        let mut idx = ((value + ANCHOR_SPACING / 2) / ANCHOR_SPACING) as usize;
        if value < SAME_AS {
            idx = idx.min(SatisfactionLabel::SlightlyWorse as usize);
        }
        Self::ALL[idx]
    }

    pub fn text(&self, locale: Locale) -> &'static str {
        use SatisfactionLabel::*;
        match locale {
            Locale::English => match self {
                MuchWorse => "Much worse",
                Worse => "Worse",
                SlightlyWorse => "Slightly worse",
                SameAs => "The same as",
                SlightlyBetter => "Slightly better",
                Better => "Better",
                MuchBetter => "Much better",
            },
            Locale::German => match self {
                MuchWorse => "viel schlechter als",
                Worse => "schlechter als",
                SlightlyWorse => "etwas schlechter als",
                SameAs => "genauso wie",
                SlightlyBetter => "etwas besser als",
                Better => "besser als",
                MuchBetter => "viel besser als",
            },
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.text(Locale::English) == text || l.text(Locale::German) == text)
    }
}

impl fmt::Display for SatisfactionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.text(Locale::English))
    }
}
