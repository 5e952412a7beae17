//! Runtime correction over a precomputed [`RewriteTable`].
//!
//! No candidate evaluation happens on the request path: a lookup is one
//! normalization plus one hash probe. The active table is an immutable
//! snapshot behind an atomic pointer, so a reload never blocks readers and a
//! lookup always sees exactly one table.

pub mod http;

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use arc_swap::ArcSwapOption;
use serde::Serialize;

use crate::error::Result;
use crate::query::{normalize, NormalizedQuery};
use crate::trainer::{load_snapshot, RewriteTable};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorrectionResponse {
    /// The input exactly as received, so callers can always offer the
    /// original transcription back to the user.
    pub original: String,
    pub normalized: NormalizedQuery,
    pub corrected: Option<NormalizedQuery>,
    pub triggered: bool,
    pub table_version: String,
}

impl CorrectionResponse {
    /// The query to search with: the correction if one fired, else the
    /// normalized input.
    pub fn effective(&self) -> &NormalizedQuery {
        self.corrected.as_ref().unwrap_or(&self.normalized)
    }
}

/// Looks `raw` up in `table`.
pub fn correct(raw: &str, table: &RewriteTable) -> Result<CorrectionResponse> {
    let normalized = normalize(raw)?;
    let corrected = table.get(normalized.as_str()).map(|e| e.correction.clone());
    Ok(CorrectionResponse {
        original: raw.to_owned(),
        triggered: corrected.is_some(),
        corrected,
        normalized,
        table_version: table.version_tag().to_owned(),
    })
}

/// Percentage of lookups that produced a correction; `None` without lookups.
pub fn trigger_rate(total: u64, triggered: u64) -> Option<f64> {
    (total > 0).then(|| (triggered as f64 * 100.0) / total as f64)
}

#[derive(Debug, Default)]
pub struct ServingStats {
    total: AtomicU64,
    triggered: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatsSnapshot {
    pub total: u64,
    pub triggered: u64,
    pub trigger_rate_pct: Option<f64>,
}

impl ServingStats {
    pub fn record(&self, triggered: bool) {
        // Bump `triggered` first so a concurrent reader never sees it ahead
        // of `total`.
        if triggered {
            self.triggered.fetch_add(1, Ordering::SeqCst);
        }
        self.total.fetch_add(1, Ordering::SeqCst);
    }

    pub fn snapshot(&self) -> StatsSnapshot {
        let total = self.total.load(Ordering::SeqCst);
        let triggered = self.triggered.load(Ordering::SeqCst).min(total);
        StatsSnapshot {
            total,
            triggered,
            trigger_rate_pct: trigger_rate(total, triggered),
        }
    }
}

/// Shared correction service: active table plus counters.
#[derive(Debug, Default)]
pub struct Corrector {
    active: ArcSwapOption<RewriteTable>,
    stats: ServingStats,
}

impl Corrector {
    pub fn new(table: RewriteTable) -> Self {
        Corrector {
            active: ArcSwapOption::from_pointee(table),
            stats: ServingStats::default(),
        }
    }

    /// Without a table every query passes through untouched.
    pub fn without_table() -> Self {
        Corrector::default()
    }

    pub fn correct(&self, raw: &str) -> Result<CorrectionResponse> {
        let guard = self.active.load();
        let response = match guard.as_deref() {
            Some(table) => correct(raw, table)?,
            None => CorrectionResponse {
                original: raw.to_owned(),
                normalized: normalize(raw)?,
                corrected: None,
                triggered: false,
                table_version: String::new(),
            },
        };
        self.stats.record(response.triggered);
        Ok(response)
    }

    /// Atomically installs `table`, returning the previous one.
    pub fn swap_snapshot(&self, table: RewriteTable) -> Option<Arc<RewriteTable>> {
        self.active.swap(Some(Arc::new(table)))
    }

    /// Loads and validates a snapshot, then swaps it in. On error the active
    /// table is left untouched.
    pub fn reload(&self, path: impl AsRef<Path>) -> Result<String> {
        let table = load_snapshot(path)?;
        let tag = table.version_tag().to_owned();
        self.swap_snapshot(table);
        Ok(tag)
    }

    pub fn table(&self) -> Option<Arc<RewriteTable>> {
        self.active.load_full()
    }

    pub fn is_loaded(&self) -> bool {
        self.active.load().is_some()
    }

    pub fn stats(&self) -> StatsSnapshot {
        self.stats.snapshot()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::{RewriteEntry, TableMetadata, TrainerConfig, SNAPSHOT_VERSION};

    fn q(s: &str) -> NormalizedQuery {
        normalize(s).unwrap()
    }

    fn table(pairs: &[(&str, &str)]) -> RewriteTable {
        RewriteTable::new(
            pairs.iter().map(|(a, b)| {
                (
                    q(a),
                    RewriteEntry {
                        correction: q(b),
                        pair_count: 10,
                        ratio: 0.5,
                    },
                )
            }),
            TableMetadata {
                version: SNAPSHOT_VERSION,
                config: TrainerConfig::default(),
                records: 100,
                built_at: 0,
            },
        )
    }

    #[test]
    fn passthrough_when_missing() {
        let t = table(&[("rocks and", "roxanne")]);
        let r = correct("gaming chair", &t).unwrap();
        assert!(!r.triggered);
        assert_eq!(r.corrected, None);
        assert_eq!(r.normalized.as_str(), "gaming chair");
        assert_eq!(r.effective().as_str(), "gaming chair");
    }

    #[test]
    fn rewrites_after_normalization() {
        let t = table(&[("rocks and", "roxanne"), ("how stores", "house tours")]);
        let r = correct("Rocks And", &t).unwrap();
        assert!(r.triggered);
        assert_eq!(r.original, "Rocks And");
        assert_eq!(r.corrected.as_ref().unwrap().as_str(), "roxanne");
        assert_eq!(correct("how stores", &t).unwrap().effective().as_str(), "house tours");
        assert_eq!(r.table_version, t.version_tag());
    }

    #[test]
    fn empty_input_is_an_error() {
        let t = table(&[]);
        assert!(correct("   ", &t).is_err());
        let c = Corrector::new(t);
        assert!(c.correct("").is_err());
        assert_eq!(c.stats().total, 0);
    }

    #[test]
    fn trigger_rates() {
        assert_eq!(trigger_rate(10_000, 176), Some(1.76));
        assert_eq!(trigger_rate(10, 0), Some(0.0));
        assert_eq!(trigger_rate(7, 7), Some(100.0));
        assert_eq!(trigger_rate(0, 0), None);
    }

    #[test]
    fn swap_changes_answers() {
        let c = Corrector::new(table(&[("rocks and", "roxanne")]));
        assert!(c.correct("rocks and").unwrap().triggered);
        c.swap_snapshot(table(&[("how stores", "house tours")]));
        assert!(!c.correct("rocks and").unwrap().triggered);
        assert!(c.correct("how stores").unwrap().triggered);
        c.swap_snapshot(table(&[]));
        assert!(!c.correct("how stores").unwrap().triggered);
        let s = c.stats();
        assert_eq!((s.total, s.triggered), (4, 2));
        assert_eq!(s.trigger_rate_pct, Some(50.0));
    }

    #[test]
    fn failed_reload_keeps_table() {
        let c = Corrector::new(table(&[("rocks and", "roxanne")]));
        assert!(c.reload("/nonexistent").is_err());
        assert!(c.correct("rocks and").unwrap().triggered);
    }

    #[test]
    fn no_table_passes_through() {
        let c = Corrector::without_table();
        assert!(!c.is_loaded());
        let r = c.correct("Rocks And").unwrap();
        assert!(!r.triggered);
        assert_eq!(r.normalized.as_str(), "rocks and");
    }
}
