//! Experiment manifests: items, playlist order and output location.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use adjustsat_core::session::{Playlist, SessionError, TrialItem};
use adjustsat_core::stimulus::{ItemDecl, ItemDefaults, VersionCache, DEFAULT_LEAKAGE_DB, DEFAULT_TARGET_LUFS};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("manifest: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PlaylistEntry {
    Id(String),
    Entry {
        item: String,
        #[serde(default)]
        training: bool,
    },
}

impl PlaylistEntry {
    pub fn item(&self) -> &str {
        match self {
            PlaylistEntry::Id(id) => id,
            PlaylistEntry::Entry { item, .. } => item,
        }
    }

    pub fn is_training(&self) -> bool {
        matches!(self, PlaylistEntry::Entry { training: true, .. })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub items: Vec<ItemDecl>,
    pub playlist: Vec<PlaylistEntry>,
    #[serde(default)]
    pub target_loudness: Option<f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Command-line overrides for item defaults.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub target_lufs: Option<f64>,
    pub leakage_db: Option<f64>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = fs::read_to_string(path).map_err(|source| ManifestError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut m: Manifest = serde_json::from_str(&text).map_err(|source| ManifestError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        m.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), ManifestError> {
        let invalid = |s: String| Err(ManifestError::Invalid(s));
        let mut ids = BTreeSet::new();
        for item in &self.items {
            if !ids.insert(item.id.as_str()) {
                return invalid(format!("item {} declared twice", item.id));
            }
        }
        if self.playlist.is_empty() {
            return invalid("playlist is empty".into());
        }
        let mut seen = BTreeSet::new();
        for (i, e) in self.playlist.iter().enumerate() {
            if !ids.contains(e.item()) {
                return invalid(format!("playlist entry {} refers to undeclared item {}", i + 1, e.item()));
            }
            if !seen.insert(e.item()) {
                return invalid(format!("item {} appears twice in the playlist", e.item()));
            }
            if e.is_training() != (i == 0) {
                return invalid("exactly the first playlist entry must be marked as training".into());
            }
        }
        Ok(())
    }

    pub fn item(&self, id: &str) -> Option<&ItemDecl> {
        self.items.iter().find(|i| i.id == id)
    }

    pub fn defaults(&self, o: Overrides) -> ItemDefaults {
        ItemDefaults {
            target_lufs: o.target_lufs.or(self.target_loudness).unwrap_or(DEFAULT_TARGET_LUFS),
            leakage_db: o.leakage_db.unwrap_or(DEFAULT_LEAKAGE_DB),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.base.join(&self.output_dir)
    }

    pub fn cache(&self) -> VersionCache {
        VersionCache::new(self.output_dir().join("cache"))
    }

    pub fn results_dir(&self) -> PathBuf {
        self.output_dir().join("results")
    }

    /// Session playlist built from the cache indexes written by `prepare`.
    pub fn playlist(&self, cache: &VersionCache) -> Result<Playlist, PlaylistError> {
        let mut entries = Vec::with_capacity(self.playlist.len());
        for e in &self.playlist {
            let decl = self.item(e.item()).expect("validated manifest");
            let index = cache
                .index(&decl.id)
                .ok()
                .flatten()
                .ok_or_else(|| PlaylistError::CacheMissing(decl.id.clone()))?;
            if index.key.grid != decl.grid.to_string() {
                return Err(PlaylistError::Stale(decl.id.clone()));
            }
            entries.push(TrialItem {
                id: decl.id.clone(),
                label: decl.label.clone(),
                de_method: decl.de_method,
                prod_type: decl.prod_type,
                default_ld: index.key.default_ld,
                offsets: decl.grid.offsets().to_vec(),
                duration_ms: index.duration_ms,
            });
        }
        Ok(Playlist::new(entries)?)
    }
}

#[derive(Debug, Error)]
pub enum PlaylistError {
    #[error("no rendered versions for item {0}; run prepare first")]
    CacheMissing(String),
    #[error("cached versions of item {0} do not match the manifest; run prepare again")]
    Stale(String),
    #[error(transparent)]
    Session(#[from] SessionError),
}
