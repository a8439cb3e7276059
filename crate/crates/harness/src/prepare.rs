//! Rendering and caching every item's version set.

use adjustsat_core::stimulus::{render_version_set, CacheKey, StimulusError};

use crate::manifest::{Manifest, Overrides};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItemStatus {
    Rendered,
    UpToDate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemOutcome {
    pub id: String,
    pub status: ItemStatus,
    pub versions: usize,
    pub default_ld: f64,
    /// Loudest minus quietest version, in LU.
    pub loudness_band: f64,
}

#[derive(Debug, Default)]
pub struct PrepareReport {
    pub items: Vec<ItemOutcome>,
    pub failures: Vec<(String, StimulusError)>,
}

impl PrepareReport {
    pub fn rendered(&self) -> usize {
        self.items.iter().filter(|i| i.status == ItemStatus::Rendered).count()
    }

    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Renders every declared item whose cache entry is missing or stale.
/// Failures are collected per item; the remaining items are still prepared.
pub fn prepare(manifest: &Manifest, overrides: Overrides) -> PrepareReport {
    let defaults = manifest.defaults(overrides);
    let cache = manifest.cache();
    let mut report = PrepareReport::default();
    for decl in &manifest.items {
        let result = (|| -> Result<ItemOutcome, StimulusError> {
            let loaded = decl.load(&manifest.base, defaults)?;
            let key = CacheKey::for_item(&loaded.spec, &loaded.stems);
            let band = |index: &adjustsat_core::stimulus::CacheIndex| {
                let l = index.versions.iter().map(|v| v.measured_lufs);
                l.clone().fold(f64::NEG_INFINITY, f64::max) - l.fold(f64::INFINITY, f64::min)
            };
            if let Some(index) = cache.lookup(&key) {
                tracing::debug!(item = %decl.id, "cache up to date");
                return Ok(ItemOutcome {
                    id: decl.id.clone(),
                    status: ItemStatus::UpToDate,
                    versions: index.versions.len(),
                    default_ld: loaded.spec.default_ld,
                    loudness_band: band(&index),
                });
            }
            tracing::info!(item = %decl.id, versions = loaded.spec.grid.len(), "rendering");
            let set = render_version_set(&loaded.spec, &loaded.rendering_stems())?;
            let index = cache.store(key, &set)?;
            Ok(ItemOutcome {
                id: decl.id.clone(),
                status: ItemStatus::Rendered,
                versions: index.versions.len(),
                default_ld: loaded.spec.default_ld,
                loudness_band: band(&index),
            })
        })();
        match result {
            Ok(o) => report.items.push(o),
            Err(e) => report.failures.push((decl.id.clone(), e)),
        }
    }
    report
}
