use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use super::{AbandonmentMode, CorrectionPair};
use crate::query::{NormalizedQuery, QueryLogRecord};

/// Per-query occurrence counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryStats {
    /// Occurrences of the query in the corpus.
    pub count: u64,
    /// Occurrences with no click.
    pub zero_click: u64,
    /// Abandoned occurrences that produced a correction pair.
    pub refined: u64,
}

/// `count(q)`, `count(q2|q1)` and the abandonment counts behind
/// `abandonment_rate(q)`.
///
/// Tables built from disjoint shards can be combined with [`merge`], which is
/// a plain count addition and so independent of merge order.
///
/// [`merge`]: CountTables::merge
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountTables {
    queries: HashMap<NormalizedQuery, QueryStats>,
    pairs: HashMap<NormalizedQuery, BTreeMap<NormalizedQuery, u64>>,
    records: u64,
    latest_timestamp: u64,
    mode: AbandonmentMode,
}

pub fn build_tables(
    records: &[QueryLogRecord],
    pairs: &[CorrectionPair],
    mode: AbandonmentMode,
) -> CountTables {
    let empty = || CountTables {
        mode,
        ..Default::default()
    };
    let mut tables = records
        .par_chunks(16 * 1024)
        .map(|chunk| {
            let mut t = empty();
            for r in chunk {
                t.add_record(r);
            }
            t
        })
        .reduce(empty, |mut a, b| {
            a.merge(b);
            a
        });
    for pair in pairs {
        tables.add_pair(&pair.q1, &pair.q2);
    }
    tables
}

impl CountTables {
    pub fn new(mode: AbandonmentMode) -> Self {
        CountTables {
            mode,
            ..Default::default()
        }
    }

    pub fn add_record(&mut self, record: &QueryLogRecord) {
        let stats = self.queries.entry(record.query().clone()).or_default();
        stats.count += 1;
        if !record.successful() {
            stats.zero_click += 1;
        }
        self.records += 1;
        self.latest_timestamp = self.latest_timestamp.max(record.timestamp());
    }

    /// Records one mined pair. The abandoned side must already be counted via
    /// [`add_record`](Self::add_record).
    pub fn add_pair(&mut self, q1: &NormalizedQuery, q2: &NormalizedQuery) {
        *self
            .pairs
            .entry(q1.clone())
            .or_default()
            .entry(q2.clone())
            .or_default() += 1;
        self.queries.entry(q1.clone()).or_default().refined += 1;
    }

    pub fn merge(&mut self, other: CountTables) {
        for (q, s) in other.queries {
            let e = self.queries.entry(q).or_default();
            e.count += s.count;
            e.zero_click += s.zero_click;
            e.refined += s.refined;
        }
        for (q1, targets) in other.pairs {
            let e = self.pairs.entry(q1).or_default();
            for (q2, n) in targets {
                *e.entry(q2).or_default() += n;
            }
        }
        self.records += other.records;
        self.latest_timestamp = self.latest_timestamp.max(other.latest_timestamp);
    }

    pub fn mode(&self) -> AbandonmentMode {
        self.mode
    }

    /// Number of log records counted.
    pub fn records(&self) -> u64 {
        self.records
    }

    pub fn latest_timestamp(&self) -> u64 {
        self.latest_timestamp
    }

    pub fn stats(&self, q: &str) -> Option<QueryStats> {
        self.queries.get(q).copied()
    }

    pub fn query_count(&self, q: &str) -> u64 {
        self.queries.get(q).map_or(0, |s| s.count)
    }

    pub fn pair_count(&self, q1: &str, q2: &str) -> u64 {
        self.pairs
            .get(q1)
            .and_then(|t| t.get(q2))
            .copied()
            .unwrap_or(0)
    }

    /// Corrections seen for `q1`, in lexicographic order.
    pub fn corrections(&self, q1: &str) -> impl Iterator<Item = (&NormalizedQuery, u64)> {
        self.pairs
            .get(q1)
            .into_iter()
            .flat_map(|t| t.iter().map(|(q, n)| (q, *n)))
    }

    /// Queries that have at least one mined correction.
    pub fn sources(&self) -> impl Iterator<Item = &NormalizedQuery> {
        self.pairs.keys()
    }

    pub fn queries(&self) -> impl Iterator<Item = (&NormalizedQuery, &QueryStats)> {
        self.queries.iter()
    }

    pub fn distinct_queries(&self) -> usize {
        self.queries.len()
    }

    /// Numerator of `abandonment_rate(q)` under the table's mode.
    pub fn abandoned_count(&self, q: &str) -> u64 {
        self.queries.get(q).map_or(0, |s| match self.mode {
            AbandonmentMode::ZeroClick => s.zero_click,
            AbandonmentMode::Unrefined => s.zero_click.saturating_sub(s.refined),
        })
    }

    pub fn abandonment_rate(&self, q: &str) -> Option<f64> {
        let count = self.query_count(q);
        (count > 0).then(|| self.abandoned_count(q) as f64 / count as f64)
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}
