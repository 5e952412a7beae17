use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{snapshot, CountTables, TrainerConfig};
use crate::phonetics::{normalized_phonetic_distance, phonetic_distance, PhoneticEncoder};
use crate::query::NormalizedQuery;

#[derive(Debug, Clone, PartialEq)]
pub struct RewriteEntry {
    pub correction: NormalizedQuery,
    pub pair_count: u64,
    /// `pair_count / count(query)` at build time.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableMetadata {
    pub version: u32,
    pub config: TrainerConfig,
    /// Log records the table was trained on.
    pub records: u64,
    /// Latest log timestamp seen in training, so rebuilding from the same
    /// logs yields the same bytes.
    pub built_at: u64,
}

/// Offline-computed map from a query to its single best correction.
#[derive(Debug, Clone)]
pub struct RewriteTable {
    entries: HashMap<NormalizedQuery, RewriteEntry>,
    metadata: TableMetadata,
    fingerprint: String,
}

impl PartialEq for RewriteTable {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries && self.metadata == other.metadata
    }
}

impl RewriteTable {
    /// Assembles a table. Entries mapping a query to itself are dropped.
    pub fn new(
        entries: impl IntoIterator<Item = (NormalizedQuery, RewriteEntry)>,
        metadata: TableMetadata,
    ) -> Self {
        let entries = entries
            .into_iter()
            .filter(|(q, e)| *q != e.correction)
            .collect();
        let mut table = RewriteTable {
            entries,
            metadata,
            fingerprint: String::new(),
        };
        table.fingerprint = fingerprint(snapshot::to_snapshot_string(&table).as_bytes());
        table
    }

    pub(super) fn from_parts(
        entries: HashMap<NormalizedQuery, RewriteEntry>,
        metadata: TableMetadata,
        fingerprint: String,
    ) -> Self {
        RewriteTable {
            entries,
            metadata,
            fingerprint,
        }
    }

    pub fn empty(config: TrainerConfig) -> Self {
        Self::new(
            [],
            TableMetadata {
                version: snapshot::SNAPSHOT_VERSION,
                config,
                records: 0,
                built_at: 0,
            },
        )
    }

    pub fn get(&self, query: &str) -> Option<&RewriteEntry> {
        self.entries.get(query)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn metadata(&self) -> &TableMetadata {
        &self.metadata
    }

    /// Identifies the table contents: format version plus a digest of the
    /// canonical snapshot text.
    pub fn version_tag(&self) -> &str {
        &self.fingerprint
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NormalizedQuery, &RewriteEntry)> {
        self.entries.iter()
    }

    /// Entries ordered by query.
    pub fn sorted_entries(&self) -> Vec<(&NormalizedQuery, &RewriteEntry)> {
        let mut v: Vec<_> = self.entries.iter().collect();
        v.sort_unstable_by(|a, b| a.0.cmp(b.0));
        v
    }
}

pub(super) fn fingerprint(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let hex: String = digest[..6].iter().map(|b| format!("{b:02x}")).collect();
    format!("v{}-{hex}", snapshot::SNAPSHOT_VERSION)
}

fn within_distance(
    q: &NormalizedQuery,
    candidate: &NormalizedQuery,
    config: &TrainerConfig,
    encoder: &impl PhoneticEncoder,
) -> bool {
    let a = encoder.encode(q);
    let b = encoder.encode(candidate);
    match config.tau_normalized {
        Some(limit) => normalized_phonetic_distance(&a, &b) <= limit,
        None => phonetic_distance(&a, &b) <= config.tau as usize,
    }
}

/// Candidates passing all three conditions, with their pair counts.
fn candidates<'t>(
    q: &NormalizedQuery,
    tables: &'t CountTables,
    config: &TrainerConfig,
    encoder: &impl PhoneticEncoder,
) -> Vec<(&'t NormalizedQuery, u64)> {
    let count = tables.query_count(q.as_str());
    if count < config.min_query_count {
        return Vec::new();
    }
    let abandoned = tables.abandoned_count(q.as_str());
    tables
        .corrections(q.as_str())
        .filter(|&(candidate, n)| {
            // 1 - n/count < abandoned/count  <=>  count - n < abandoned
            let less_abandoned = count.saturating_sub(n) < abandoned;
            candidate != q
                && config.beta.is_exceeded_by(n, count)
                && less_abandoned
                && within_distance(q, candidate, config, encoder)
        })
        .collect()
}

/// The candidate set for `q`. Empty when `q` is rarer than
/// `min_query_count` or has no qualifying correction.
pub fn candidate_set(
    q: &NormalizedQuery,
    tables: &CountTables,
    config: &TrainerConfig,
    encoder: &impl PhoneticEncoder,
) -> BTreeSet<NormalizedQuery> {
    candidates(q, tables, config, encoder)
        .into_iter()
        .map(|(c, _)| c.clone())
        .collect()
}

/// Picks the most frequent candidate for every query whose abandonment rate
/// exceeds `alpha`. Ties go to the lexicographically smallest correction.
pub fn build_rewrite_table(
    tables: &CountTables,
    config: &TrainerConfig,
    encoder: &impl PhoneticEncoder,
) -> RewriteTable {
    let sources: Vec<&NormalizedQuery> = tables.sources().collect();
    let entries: Vec<(NormalizedQuery, RewriteEntry)> = sources
        .par_iter()
        .filter_map(|&q| {
            let count = tables.query_count(q.as_str());
            if !config.alpha.is_exceeded_by(tables.abandoned_count(q.as_str()), count) {
                return None;
            }
            // corrections() is in lexicographic order, so keeping the first
            // maximum implements the tie-break.
            let mut best: Option<(&NormalizedQuery, u64)> = None;
            for (c, n) in candidates(q, tables, config, encoder) {
                if best.is_none_or(|(_, m)| n > m) {
                    best = Some((c, n));
                }
            }
            best.map(|(c, n)| {
                (
                    q.clone(),
                    RewriteEntry {
                        correction: c.clone(),
                        pair_count: n,
                        ratio: n as f64 / count as f64,
                    },
                )
            })
        })
        .collect();
    RewriteTable::new(
        entries,
        TableMetadata {
            version: snapshot::SNAPSHOT_VERSION,
            config: config.clone(),
            records: tables.records(),
            built_at: tables.latest_timestamp(),
        },
    )
}
