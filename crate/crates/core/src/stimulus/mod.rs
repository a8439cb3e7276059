//! Test items, LU-stepped version sets and the leakage model that stands in
//! for dialogue separation.

mod cache;
mod grid;
mod render;
mod separation;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{stems_digest, version_file_name, CacheEntry, CacheIndex, CacheKey, VersionCache};
pub use grid::{GridError, GridSegment, LdGrid, AR_GRID, WDR_GRID};
pub use render::{
    compute_ld, ld_in_mix, render_version, render_version_set, round_lu, version_components,
    RenderedVersion, StemPair, Version, VersionSet, LEVEL_TOLERANCE_LU,
};
pub use separation::{max_achievable_ld, simulate_ds, LeakageModel, Separation};

use crate::audio::{read_wav, AudioError};
use crate::loudness::LoudnessError;

/// Largest accepted gap between a declared and a measured default LD.
pub const DEFAULT_LD_TOLERANCE_LU: f64 = 0.5;
pub const DEFAULT_TARGET_LUFS: f64 = -23.0;
pub const DEFAULT_LEAKAGE_DB: f64 = -20.0;

#[derive(Debug, Error)]
pub enum StimulusError {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Loudness(#[from] LoudnessError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("{stem} stem is below the absolute gate")]
    UnmeasurableStem { stem: &'static str },
    #[error("mix is below the absolute gate")]
    UnmeasurableMix,
    #[error("offset {0} is not finite")]
    NonFiniteOffset(f64),
    #[error("leakage must be <= 0 dB, got {0}")]
    PositiveLeakage(f64),
    #[error("version measures {measured:.2} LUFS, outside ±0.2 LU of {target}")]
    Leveling { measured: f64, target: f64 },
    #[error("version at offset {offset:+.1} LU: {source}")]
    Version {
        offset: f64,
        #[source]
        source: Box<StimulusError>,
    },
    #[error("item {item}: {reason}")]
    InvalidItem { item: String, reason: String },
    #[error("item {item}: cannot read {path}: {source}")]
    StemFile {
        item: String,
        path: PathBuf,
        #[source]
        source: AudioError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DeMethod {
    /// Original, separately produced objects.
    #[serde(rename = "OO")]
    OriginalObjects,
    /// Stems estimated from the finished mix.
    #[serde(rename = "DS")]
    DialogueSeparation,
}

impl DeMethod {
    pub fn code(&self) -> &'static str {
        match self {
            DeMethod::OriginalObjects => "OO",
            DeMethod::DialogueSeparation => "DS",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "OO" => Some(DeMethod::OriginalObjects),
            "DS" => Some(DeMethod::DialogueSeparation),
            _ => None,
        }
    }
}

impl fmt::Display for DeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProdType {
    AR,
    WDR,
}

impl ProdType {
    pub fn code(&self) -> &'static str {
        match self {
            ProdType::AR => "AR",
            ProdType::WDR => "WDR",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "AR" => Some(ProdType::AR),
            "WDR" => Some(ProdType::WDR),
            _ => None,
        }
    }
}

impl fmt::Display for ProdType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ContentTag {
    #[serde(rename = "fVO")]
    FemaleVoiceOver,
    #[serde(rename = "mVO")]
    MaleVoiceOver,
    #[serde(rename = "music")]
    Music,
    #[serde(rename = "noise")]
    Noise,
}

/// One test item as declared in a manifest: stem paths and optional fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemDecl {
    pub id: String,
    pub label: String,
    pub de_method: DeMethod,
    pub prod_type: ProdType,
    #[serde(default)]
    pub content_tags: BTreeSet<ContentTag>,
    pub fg: PathBuf,
    pub bg: PathBuf,
    pub grid: LdGrid,
    #[serde(default)]
    pub default_ld: Option<f64>,
    #[serde(default)]
    pub target_loudness: Option<f64>,
    #[serde(default)]
    pub leakage: Option<f64>,
}

/// A fully resolved test item.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemSpec {
    pub id: String,
    pub label: String,
    pub de_method: DeMethod,
    pub prod_type: ProdType,
    pub content_tags: BTreeSet<ContentTag>,
    pub grid: LdGrid,
    pub default_ld: f64,
    pub target_loudness: f64,
    /// Leakage in dB; set exactly for DS items.
    pub leakage: Option<f64>,
}

impl ItemSpec {
    pub fn leakage_model(&self) -> LeakageModel {
        match self.leakage {
            Some(db) => LeakageModel::new(db).unwrap_or_default(),
            None => LeakageModel::disabled(),
        }
    }
}

/// Fallbacks applied to fields a manifest item leaves out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItemDefaults {
    pub target_lufs: f64,
    pub leakage_db: f64,
}

impl Default for ItemDefaults {
    fn default() -> Self {
        ItemDefaults {
            target_lufs: DEFAULT_TARGET_LUFS,
            leakage_db: DEFAULT_LEAKAGE_DB,
        }
    }
}

/// An item together with its ingested (true) stems.
#[derive(Debug, Clone)]
pub struct LoadedItem {
    pub spec: ItemSpec,
    pub stems: StemPair,
}

impl LoadedItem {
    /// Stems the versions are rendered from: the leakage estimates for DS
    /// items, the true stems otherwise.
    pub fn rendering_stems(&self) -> StemPair {
        match self.spec.de_method {
            DeMethod::DialogueSeparation => simulate_ds(&self.stems, &self.spec.leakage_model()),
            DeMethod::OriginalObjects => self.stems.clone(),
        }
    }
}

impl ItemDecl {
    /// Reads the stems (paths relative to `base`) and resolves the item.
    pub fn load(&self, base: &Path, defaults: ItemDefaults) -> Result<LoadedItem, StimulusError> {
        let read = |p: &PathBuf| {
            let path = base.join(p);
            read_wav(&path).map_err(|source| StimulusError::StemFile {
                item: self.id.clone(),
                path,
                source,
            })
        };
        let stems = StemPair::new(read(&self.fg)?, read(&self.bg)?)?;
        let spec = self.resolve(&stems, defaults)?;
        Ok(LoadedItem { spec, stems })
    }

    /// Checks the declaration against its stems and fills in defaults.
    pub fn resolve(&self, stems: &StemPair, defaults: ItemDefaults) -> Result<ItemSpec, StimulusError> {
        let invalid = |reason: String| StimulusError::InvalidItem {
            item: self.id.clone(),
            reason,
        };
        if self.id.is_empty() || self.id.contains(['/', '\\']) || self.id.starts_with('.') {
            return Err(invalid(format!("id {:?} is not a plain name", self.id)));
        }
        let leakage = match (self.de_method, self.leakage) {
            (DeMethod::OriginalObjects, None) => None,
            (DeMethod::OriginalObjects, Some(_)) => {
                return Err(invalid("OO items take no leakage".into()));
            }
            (DeMethod::DialogueSeparation, l) => {
                let db = l.unwrap_or(defaults.leakage_db);
                LeakageModel::new(db)?;
                Some(db)
            }
        };
        let measured = compute_ld(stems)?;
        let default_ld = match self.default_ld {
            Some(d) if (d - measured).abs() > DEFAULT_LD_TOLERANCE_LU => {
                return Err(invalid(format!(
                    "declared default LD {d} LU but stems measure {measured:.2} LU"
                )));
            }
            Some(d) => d,
            None => round_lu((measured * 10.0).round() / 10.0),
        };
        Ok(ItemSpec {
            id: self.id.clone(),
            label: self.label.clone(),
            de_method: self.de_method,
            prod_type: self.prod_type,
            content_tags: self.content_tags.clone(),
            grid: self.grid.clone(),
            default_ld,
            target_loudness: self.target_loudness.unwrap_or(defaults.target_lufs),
            leakage,
        })
    }
}
