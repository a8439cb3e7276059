//! On-disk cache of rendered versions.
//!
//! Layout under the cache root:
//!
//! ```text
//! <item_id>/v+12.0.wav
//! <item_id>/v-0.8.wav
//! <item_id>/index.json
//! ```
//!
//! The index records the cache key and the measured loudness of every
//! version. Files are written to a temporary name and renamed into place, so
//! concurrent writers of the same key never expose a partial file.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::render::{StemPair, VersionSet};
use super::ItemSpec;
use crate::audio::{read_wav, write_wav, AudioClip, AudioError, WavEncoding};

pub const INDEX_FILE: &str = "index.json";

/// File name of the version at `offset`: sign and one decimal.
pub fn version_file_name(offset: f64) -> String {
    let rounded = (offset * 10.0).round() / 10.0 + 0.0;
    format!("v{rounded:+.1}.wav")
}

/// SHA-256 over the sample rate and the bit patterns of both stems.
pub fn stems_digest(stems: &StemPair) -> String {
    let mut h = Sha256::new();
    h.update(stems.sample_rate().to_le_bytes());
    for clip in [stems.fg(), stems.bg()] {
        h.update((clip.channel_count() as u64).to_le_bytes());
        for c in clip.channels() {
            for s in c {
                h.update(s.to_bits().to_le_bytes());
            }
        }
    }
    hex::encode(h.finalize())
}

/// Everything that determines the content of an item's versions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheKey {
    pub item_id: String,
    pub target_lufs: f64,
    pub leakage_db: Option<f64>,
    pub grid: String,
    pub default_ld: f64,
    pub stems_sha256: String,
}

impl CacheKey {
    /// Key of `spec` rendered from the true stems `stems`.
    pub fn for_item(spec: &ItemSpec, stems: &StemPair) -> Self {
        CacheKey {
            item_id: spec.id.clone(),
            target_lufs: spec.target_loudness,
            leakage_db: spec.leakage,
            grid: spec.grid.to_string(),
            default_ld: spec.default_ld,
            stems_sha256: stems_digest(stems),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub offset: f64,
    pub file: String,
    pub measured_lufs: f64,
    pub nominal_ld: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheIndex {
    pub key: CacheKey,
    pub sample_rate: u32,
    pub duration_ms: u64,
    pub versions: Vec<CacheEntry>,
}

impl CacheIndex {
    pub fn entry(&self, offset: f64) -> Option<&CacheEntry> {
        self.versions.iter().find(|e| (e.offset - offset).abs() < 1e-6)
    }
}

#[derive(Debug, Clone)]
pub struct VersionCache {
    root: PathBuf,
}

impl VersionCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        VersionCache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn item_dir(&self, item_id: &str) -> PathBuf {
        self.root.join(item_id)
    }

    pub fn version_path(&self, item_id: &str, offset: f64) -> PathBuf {
        self.item_dir(item_id).join(version_file_name(offset))
    }

    /// Reads the index of `item_id`, if any.
    pub fn index(&self, item_id: &str) -> io::Result<Option<CacheIndex>> {
        let path = self.item_dir(item_id).join(INDEX_FILE);
        match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// The index for `key` if it exists, matches, and every listed file is present.
    pub fn lookup(&self, key: &CacheKey) -> Option<CacheIndex> {
        let index = self.index(&key.item_id).ok().flatten()?;
        if &index.key != key {
            return None;
        }
        let dir = self.item_dir(&key.item_id);
        index
            .versions
            .iter()
            .all(|e| dir.join(&e.file).is_file())
            .then_some(index)
    }

    /// Writes every version as 24-bit PCM and then the index.
    pub fn store(&self, key: CacheKey, set: &VersionSet) -> Result<CacheIndex, AudioError> {
        let dir = self.item_dir(&key.item_id);
        fs::create_dir_all(&dir).map_err(hound::Error::IoError)?;
        let mut versions = Vec::with_capacity(set.versions.len());
        for v in &set.versions {
            let file = version_file_name(v.offset);
            let tmp = dir.join(format!(".{file}.{}.tmp", std::process::id()));
            write_wav(&tmp, &v.audio, WavEncoding::Pcm24)?;
            fs::rename(&tmp, dir.join(&file)).map_err(hound::Error::IoError)?;
            versions.push(CacheEntry {
                offset: v.offset,
                file,
                measured_lufs: v.measured_lufs,
                nominal_ld: v.nominal_ld,
            });
        }
        let first = &set.versions[0].audio;
        let index = CacheIndex {
            key,
            sample_rate: first.sample_rate(),
            duration_ms: (first.duration_secs() * 1000.0).round() as u64,
            versions,
        };
        let json = serde_json::to_vec_pretty(&index).expect("index serializes");
        let tmp = dir.join(format!(".{INDEX_FILE}.{}.tmp", std::process::id()));
        fs::write(&tmp, json).map_err(hound::Error::IoError)?;
        fs::rename(&tmp, dir.join(INDEX_FILE)).map_err(hound::Error::IoError)?;
        Ok(index)
    }

    pub fn load_version(&self, item_id: &str, offset: f64) -> Result<AudioClip, AudioError> {
        read_wav(self.version_path(item_id, offset))
    }
}
