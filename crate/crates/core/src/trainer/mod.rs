//! Offline training: mine correction pairs from query logs, count them, and
//! precompute the single best rewrite for every query that qualifies.
//!
//! A correction `q'` is a candidate for `q` when all of the following hold:
//!
//! * `phonetic_distance(q', q) <= tau`
//! * `1 - count(q'|q) / count(q) < abandonment_rate(q)`
//! * `count(q'|q) / count(q) > beta`
//!
//! and only queries whose abandonment rate exceeds `alpha` are considered at
//! all. The winner is the candidate with the largest pair count.

mod mining;
mod rewrite;
mod snapshot;
mod tables;

use serde::{Deserialize, Serialize};

pub use mining::{classify, group_by_user, mine_pairs, CorrectionPair};
pub use rewrite::{build_rewrite_table, candidate_set, RewriteEntry, RewriteTable, TableMetadata};
pub use snapshot::{
    load_snapshot, parse_snapshot, write_snapshot, SNAPSHOT_VERSION,
};
pub use tables::{build_tables, CountTables, QueryStats};

use crate::error::{Error, Result};
use crate::fraction::Fraction;
use crate::query::QueryLogRecord;
use crate::phonetics::PhoneticEncoder;

/// Which unclicked occurrences count toward a query's abandonment rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbandonmentMode {
    /// Every occurrence without a click.
    #[default]
    ZeroClick,
    /// Unclicked occurrences that were not followed by a mined correction.
    Unrefined,
}

impl AbandonmentMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AbandonmentMode::ZeroClick => "zero-click",
            AbandonmentMode::Unrefined => "unrefined",
        }
    }
}

impl std::str::FromStr for AbandonmentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero-click" => Ok(AbandonmentMode::ZeroClick),
            "unrefined" => Ok(AbandonmentMode::Unrefined),
            other => Err(Error::Config(format!("unknown abandonment mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    /// Minimum abandonment rate of a query before it may be rewritten.
    pub alpha: Fraction,
    /// Minimum share of a query's occurrences a correction must account for.
    pub beta: Fraction,
    /// Maximum phonetic edit distance between a query and its correction.
    pub tau: u32,
    /// Pairing window in seconds.
    #[serde(alias = "t")]
    pub t_window: u64,
    pub min_query_count: u64,
    pub abandonment: AbandonmentMode,
    /// When set, the length-normalized distance is compared against this
    /// value instead of comparing the raw distance against `tau`.
    pub tau_normalized: Option<f64>,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            alpha: "0.5".parse().unwrap(),
            beta: "0.2".parse().unwrap(),
            tau: 2,
            t_window: 60,
            min_query_count: 5,
            abandonment: AbandonmentMode::ZeroClick,
            tau_normalized: None,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_window == 0 {
            return Err(Error::Config("t_window must be positive".into()));
        }
        if self.min_query_count == 0 {
            return Err(Error::Config("min_query_count must be positive".into()));
        }
        if let Some(x) = self.tau_normalized {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Config("tau_normalized must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }
}

/// Runs the whole offline pipeline over one corpus.
pub fn train(
    records: &[QueryLogRecord],
    config: &TrainerConfig,
    encoder: &impl PhoneticEncoder,
) -> Result<RewriteTable> {
    config.validate()?;
    let pairs = mine_pairs(records, config)?;
    let tables = build_tables(records, &pairs, config.abandonment);
    Ok(build_rewrite_table(&tables, config, encoder))
}
