use serde::Serialize;

use crate::error::{Error, Result};
use crate::phonetics::{query_phonetic_distance, PhoneticEncoder};
use crate::query::QueryLogRecord;
use crate::serving::trigger_rate;
use crate::trainer::{group_by_user, RewriteTable};

/// `r2` refines `r1`: a different query, phonetically within `threshold`,
/// strictly inside `window` seconds later.
pub fn detect_refinement(
    r1: &QueryLogRecord,
    r2: &QueryLogRecord,
    threshold: u32,
    window: u64,
    encoder: &impl PhoneticEncoder,
) -> bool {
    r2.timestamp() > r1.timestamp()
        && r2.timestamp() - r1.timestamp() < window
        && r1.query() != r2.query()
        && query_phonetic_distance(r1.query(), r2.query(), encoder) <= threshold as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    All,
    /// Only queries the rewrite table fires on.
    Triggered,
}

#[derive(Debug, Clone, Copy)]
pub struct AbOptions<'a> {
    pub table: Option<&'a RewriteTable>,
    pub scope: Scope,
    pub threshold: u32,
    pub window: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbMetrics {
    pub queries: u64,
    /// Clicks per 100 queries.
    pub ctr: f64,
    /// Extended-interaction clicks per query.
    pub user_interaction_rate: f64,
    pub abandoned_pct: f64,
    pub refinement_pct: f64,
    /// Share of all queries the table fires on; zero without a table.
    pub trigger_rate_pct: f64,
}

/// Metrics over time-sorted records. A query is refined when the same user's
/// next query refines it.
pub fn ab_metrics(
    records: &[QueryLogRecord],
    options: &AbOptions<'_>,
    encoder: &impl PhoneticEncoder,
) -> Result<AbMetrics> {
    if records.is_empty() {
        return Err(Error::EmptyInput("ab_metrics needs records"));
    }
    let fires = |r: &QueryLogRecord| options.table.is_some_and(|t| t.get(r.query().as_str()).is_some());

    let (mut queries, mut clicks, mut extended, mut abandoned, mut refined) = (0u64, 0u64, 0u64, 0u64, 0u64);
    let mut total = 0u64;
    let mut triggered = 0u64;
    for stream in group_by_user(records)?.values() {
        for (i, r) in stream.iter().enumerate() {
            total += 1;
            let fired = fires(r);
            triggered += u64::from(fired);
            if options.scope == Scope::Triggered && !fired {
                continue;
            }
            let is_refined = stream
                .get(i + 1)
                .is_some_and(|next| detect_refinement(r, next, options.threshold, options.window, encoder));
            queries += 1;
            clicks += u64::from(r.clicks());
            extended += u64::from(r.extended_interaction());
            refined += u64::from(is_refined);
            abandoned += u64::from(r.clicks() == 0 && !is_refined);
        }
    }
    if queries == 0 {
        return Err(Error::EmptyInput("no queries in the selected scope"));
    }
    let per = |k: u64| k as f64 / queries as f64;
    Ok(AbMetrics {
        queries,
        ctr: 100.0 * per(clicks),
        user_interaction_rate: per(extended),
        abandoned_pct: 100.0 * per(abandoned),
        refinement_pct: 100.0 * per(refined),
        trigger_rate_pct: trigger_rate(total, triggered).unwrap_or(0.0),
    })
}

/// Relative change of treatment over control, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbComparison {
    pub control: AbMetrics,
    pub treatment: AbMetrics,
    pub ctr_change_pct: Option<f64>,
    pub user_interaction_change_pct: Option<f64>,
    pub abandoned_change_pct: Option<f64>,
    pub refinement_change_pct: Option<f64>,
}

fn relative(control: f64, treatment: f64) -> Option<f64> {
    (control != 0.0).then(|| 100.0 * (treatment - control) / control)
}

impl AbComparison {
    pub fn new(control: AbMetrics, treatment: AbMetrics) -> Self {
        AbComparison {
            control,
            treatment,
            ctr_change_pct: relative(control.ctr, treatment.ctr),
            user_interaction_change_pct: relative(control.user_interaction_rate, treatment.user_interaction_rate),
            abandoned_change_pct: relative(control.abandoned_pct, treatment.abandoned_pct),
            refinement_change_pct: relative(control.refinement_pct, treatment.refinement_pct),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phonetics::PronouncingLexicon;
    use crate::query::normalize;
    use crate::trainer::{RewriteEntry, TableMetadata, TrainerConfig, SNAPSHOT_VERSION};

    fn rec(user: &str, t: u64, text: &str, clicks: u32) -> QueryLogRecord {
        QueryLogRecord::builder(user, t, text).clicks(clicks).build().unwrap()
    }

    fn opts(table: Option<&RewriteTable>, scope: Scope) -> AbOptions<'_> {
        AbOptions {
            table,
            scope,
            threshold: 2,
            window: 60,
        }
    }

    #[test]
    fn refinement_rules() {
        let lex = PronouncingLexicon::bundled();
        let a = rec("u", 100, "rocks and", 0);
        assert!(detect_refinement(&a, &rec("u", 120, "roxanne", 1), 2, 60, lex));
        assert!(!detect_refinement(&a, &rec("u", 120, "rocks and", 1), 2, 60, lex));
        assert!(!detect_refinement(&a, &rec("u", 120, "gaming chair", 1), 2, 60, lex));
        assert!(!detect_refinement(&a, &rec("u", 160, "roxanne", 1), 2, 60, lex));
        assert!(detect_refinement(&a, &rec("u", 159, "roxanne", 1), 2, 60, lex));
    }

    #[test]
    fn ctr_definition() {
        let lex = PronouncingLexicon::bundled();
        let mut records: Vec<_> = (0..10).map(|i| rec(&format!("u{i}"), 1, "gaming chair", 0)).collect();
        records[0] = rec("u0", 1, "gaming chair", 3);
        let m = ab_metrics(&records, &opts(None, Scope::All), lex).unwrap();
        assert_eq!(m.ctr, 30.0);
        assert_eq!(m.abandoned_pct, 90.0);
        assert_eq!(m.trigger_rate_pct, 0.0);

        let clicked: Vec<_> = (0..4).map(|i| rec(&format!("u{i}"), 1, "zebra", 1)).collect();
        assert_eq!(ab_metrics(&clicked, &opts(None, Scope::All), lex).unwrap().abandoned_pct, 0.0);
        assert!(ab_metrics(&[], &opts(None, Scope::All), lex).is_err());
    }

    #[test]
    fn triggered_scope_and_refinement() {
        let lex = PronouncingLexicon::bundled();
        let q = |s: &str| normalize(s).unwrap();
        let table = RewriteTable::new(
            [(
                q("rocks and"),
                RewriteEntry {
                    correction: q("roxanne"),
                    pair_count: 5,
                    ratio: 0.5,
                },
            )],
            TableMetadata {
                version: SNAPSHOT_VERSION,
                config: TrainerConfig::default(),
                records: 0,
                built_at: 0,
            },
        );
        let records = vec![
            rec("a", 100, "rocks and", 0),
            rec("a", 120, "roxanne", 1),
            rec("b", 100, "rocks and", 0),
            rec("c", 100, "zebra", 1),
        ];
        let m = ab_metrics(&records, &opts(Some(&table), Scope::Triggered), lex).unwrap();
        assert_eq!(m.queries, 2);
        assert_eq!(m.refinement_pct, 50.0);
        assert_eq!(m.abandoned_pct, 50.0);
        assert_eq!(m.trigger_rate_pct, 50.0);
        let all = ab_metrics(&records, &opts(Some(&table), Scope::All), lex).unwrap();
        assert_eq!(all.queries, 4);
        assert_eq!(all.refinement_pct, 25.0);
    }

    #[test]
    fn comparison_is_relative() {
        let m = |ctr: f64, refinement_pct: f64| AbMetrics {
            queries: 10,
            ctr,
            user_interaction_rate: 0.0,
            abandoned_pct: 0.0,
            refinement_pct,
            trigger_rate_pct: 0.0,
        };
        let c = AbComparison::new(m(20.0, 10.0), m(25.0, 5.0));
        assert_eq!(c.ctr_change_pct, Some(25.0));
        assert_eq!(c.refinement_change_pct, Some(-50.0));
        assert_eq!(c.user_interaction_change_pct, None);
    }
}
