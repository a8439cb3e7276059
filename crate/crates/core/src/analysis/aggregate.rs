//! Grouped statistics over trial results.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{box_stats, AnalysisError, BoxStats};
use crate::session::TrialResult;
use crate::stimulus::{DeMethod, ProdType};

/// Participants whose share of invalid trials exceeds this lose all trials.
pub const DEFAULT_MAX_DISCARD_SHARE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    ByItem,
    ByListener,
    ByDeMethod,
    ByProdType,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub chosen_ld: BoxStats,
    pub satisfaction: BoxStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub key: String,
    /// Set when every member shares one method (always for by-item and
    /// by-de-method groups).
    pub de_method: Option<DeMethod>,
    pub stats: Result<GroupStats, AnalysisError>,
}

/// Means over the whole input, used for the reference lines of the figures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Overall {
    pub n: usize,
    pub mean_ld: f64,
    pub mean_satisfaction: f64,
    pub mean_ld_by_method: BTreeMap<DeMethod, f64>,
    pub mean_satisfaction_by_method: BTreeMap<DeMethod, f64>,
    /// Mean default LD over distinct item labels.
    pub mean_default_ld: f64,
    pub distinct_items: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub grouping: Grouping,
    pub groups: Vec<Group>,
    /// Present for the `All` grouping when the input is non-empty.
    pub overall: Option<Overall>,
}

impl Aggregate {
    pub fn group(&self, key: &str) -> Option<&Group> {
        self.groups.iter().find(|g| g.key == key)
    }
}

pub fn item_key(label: &str, de_method: DeMethod) -> String {
    format!("{label}-{}", de_method.code())
}

pub fn aggregate(results: &[TrialResult], grouping: Grouping) -> Aggregate {
    let mut buckets: Vec<(String, Option<DeMethod>, Vec<&TrialResult>)> = match grouping {
        Grouping::ByDeMethod => [DeMethod::OriginalObjects, DeMethod::DialogueSeparation]
            .into_iter()
            .map(|m| {
                let members = results.iter().filter(|r| r.de_method == m).collect();
                (m.code().to_string(), Some(m), members)
            })
            .collect(),
        Grouping::ByProdType => [ProdType::AR, ProdType::WDR]
            .into_iter()
            .map(|p| {
                let members = results.iter().filter(|r| r.prod_type == p).collect();
                (p.code().to_string(), None, members)
            })
            .collect(),
        Grouping::All => vec![("all".to_string(), None, results.iter().collect())],
        Grouping::ByItem => {
            let mut map: BTreeMap<(ProdType, &str, DeMethod), Vec<&TrialResult>> = BTreeMap::new();
            for r in results {
                map.entry((r.prod_type, &r.item_label, r.de_method)).or_default().push(r);
            }
            map.into_iter()
                .map(|((_, label, m), v)| (item_key(label, m), Some(m), v))
                .collect()
        }
        Grouping::ByListener => {
            let mut map: BTreeMap<&str, Vec<&TrialResult>> = BTreeMap::new();
            for r in results {
                map.entry(&r.participant_id).or_default().push(r);
            }
            map.into_iter().map(|(pid, v)| (pid.to_string(), None, v)).collect()
        }
    };
    for (_, method, members) in &mut buckets {
        if method.is_none() {
            let methods: BTreeSet<DeMethod> = members.iter().map(|r| r.de_method).collect();
            if methods.len() == 1 {
                *method = methods.into_iter().next();
            }
        }
    }

    let groups = buckets
        .into_iter()
        .map(|(key, de_method, members)| {
            let stats = group_stats(&members).map_err(|_| AnalysisError::EmptyGroup(key.clone()));
            Group { key, de_method, stats }
        })
        .collect();
    let overall = match grouping {
        Grouping::All => overall(results),
        _ => None,
    };
    Aggregate {
        grouping,
        groups,
        overall,
    }
}

fn group_stats(members: &[&TrialResult]) -> Result<GroupStats, AnalysisError> {
    let ld: Vec<f64> = members.iter().map(|r| r.chosen_ld).collect();
    let sat: Vec<f64> = members.iter().map(|r| r.satisfaction_value as f64).collect();
    Ok(GroupStats {
        chosen_ld: box_stats(&ld)?,
        satisfaction: box_stats(&sat)?,
    })
}

/// Order-independent mean.
fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v.iter().sum::<f64>() / v.len() as f64)
}

pub fn overall(results: &[TrialResult]) -> Option<Overall> {
    let mean_ld = mean(results.iter().map(|r| r.chosen_ld))?;
    let mean_satisfaction = mean(results.iter().map(|r| r.satisfaction_value as f64))?;
    let mut mean_ld_by_method = BTreeMap::new();
    let mut mean_satisfaction_by_method = BTreeMap::new();
    for m in [DeMethod::OriginalObjects, DeMethod::DialogueSeparation] {
        let of = || results.iter().filter(move |r| r.de_method == m);
        if let Some(v) = mean(of().map(|r| r.chosen_ld)) {
            mean_ld_by_method.insert(m, v);
        }
        if let Some(v) = mean(of().map(|r| r.satisfaction_value as f64)) {
            mean_satisfaction_by_method.insert(m, v);
        }
    }
    // the smallest default seen per label, so input order does not matter
    let mut defaults: BTreeMap<&str, f64> = BTreeMap::new();
    for r in results {
        let d = r.default_ld();
        defaults
            .entry(&r.item_label)
            .and_modify(|e| *e = e.min(d))
            .or_insert(d);
    }
    Some(Overall {
        n: results.len(),
        mean_ld,
        mean_satisfaction,
        mean_ld_by_method,
        mean_satisfaction_by_method,
        mean_default_ld: mean(defaults.values().copied())?,
        distinct_items: defaults.len(),
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Partition {
    pub valid: Vec<TrialResult>,
    pub discarded: Vec<TrialResult>,
    /// Participants dropped as a whole, sorted.
    pub discarded_participants: Vec<String>,
}

/// Splits results by their validity flag. With `max_discard_share`, every
/// trial of a participant whose invalid share exceeds it is discarded too.
pub fn validity_filter(results: &[TrialResult], max_discard_share: Option<f64>) -> Partition {
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in results {
        let c = counts.entry(&r.participant_id).or_default();
        c.0 += 1;
        if !r.valid {
            c.1 += 1;
        }
    }
    let dropped: BTreeSet<&str> = match max_discard_share {
        Some(limit) => counts
            .iter()
            .filter(|(_, &(total, bad))| bad as f64 / total as f64 > limit)
            .map(|(pid, _)| *pid)
            .collect(),
        None => BTreeSet::new(),
    };
    let mut out = Partition {
        discarded_participants: dropped.iter().map(|s| s.to_string()).collect(),
        ..Partition::default()
    };
    for r in results {
        if r.valid && !dropped.contains(r.participant_id.as_str()) {
            out.valid.push(r.clone());
        } else {
            out.discarded.push(r.clone());
        }
    }
    out
}
