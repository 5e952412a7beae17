use std::collections::BTreeMap;

use rayon::prelude::*;

use super::TrainerConfig;
use crate::error::{Error, Result};
use crate::query::{NormalizedQuery, Outcome, QueryLogRecord};

/// An abandoned query followed by a different, successful query from the same
/// user inside the pairing window.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CorrectionPair {
    pub q1: NormalizedQuery,
    pub q2: NormalizedQuery,
    pub user_id: String,
    pub dt: u64,
}

pub fn classify(record: &QueryLogRecord) -> Outcome {
    record.outcome()
}

/// Splits a log into per-user streams, keeping record order within each user.
/// Fails if any user's records go backwards in time.
pub fn group_by_user(records: &[QueryLogRecord]) -> Result<BTreeMap<&str, Vec<&QueryLogRecord>>> {
    let mut users: BTreeMap<&str, Vec<&QueryLogRecord>> = BTreeMap::new();
    for record in records {
        let stream = users.entry(record.user_id()).or_default();
        if let Some(prev) = stream.last() {
            if prev.timestamp() > record.timestamp() {
                return Err(Error::Unsorted {
                    user: record.user_id().to_owned(),
                    previous: prev.timestamp(),
                    next: record.timestamp(),
                });
            }
        }
        stream.push(record);
    }
    Ok(users)
}

/// Pairs each abandoned occurrence with the first later successful query
/// from the same user that differs from it and falls strictly inside the
/// window. At most one pair per abandoned occurrence.
pub fn mine_pairs(records: &[QueryLogRecord], config: &TrainerConfig) -> Result<Vec<CorrectionPair>> {
    let users = group_by_user(records)?;
    let streams: Vec<_> = users.into_values().collect();
    let per_user: Vec<Vec<CorrectionPair>> = streams
        .par_iter()
        .map(|stream| mine_stream(stream, config.t_window))
        .collect();
    Ok(per_user.into_iter().flatten().collect())
}

fn mine_stream(stream: &[&QueryLogRecord], window: u64) -> Vec<CorrectionPair> {
    let mut pairs = Vec::new();
    for (i, first) in stream.iter().enumerate() {
        if first.successful() {
            continue;
        }
        for next in &stream[i + 1..] {
            let dt = next.timestamp() - first.timestamp();
            if dt >= window {
                break;
            }
            if dt > 0 && next.successful() && next.query() != first.query() {
                pairs.push(CorrectionPair {
                    q1: first.query().clone(),
                    q2: next.query().clone(),
                    user_id: first.user_id().to_owned(),
                    dt,
                });
                break;
            }
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(user: &str, t: u64, text: &str, clicks: u32) -> QueryLogRecord {
        QueryLogRecord::builder(user, t, text).clicks(clicks).build().unwrap()
    }

    fn cfg() -> TrainerConfig {
        TrainerConfig::default()
    }

    #[test]
    fn classify_by_clicks() {
        assert_eq!(classify(&rec("u", 0, "x", 3)), Outcome::Successful);
        assert_eq!(classify(&rec("u", 0, "x", 0)), Outcome::Abandoned);
        assert_eq!(classify(&rec("u", 0, "x", 1)), Outcome::Successful);
    }

    #[test]
    fn pairs_abandoned_with_successful_retry() {
        let logs = [rec("U", 0, "rocks and", 0), rec("U", 30, "roxanne", 2)];
        let pairs = mine_pairs(&logs, &cfg()).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].q1.as_str(), "rocks and");
        assert_eq!(pairs[0].q2.as_str(), "roxanne");
        assert_eq!(pairs[0].dt, 30);
    }

    #[test]
    fn window_is_exclusive() {
        let logs = [rec("U", 0, "rocks and", 0), rec("U", 90, "roxanne", 2)];
        assert!(mine_pairs(&logs, &cfg()).unwrap().is_empty());
        let logs = [rec("U", 0, "rocks and", 0), rec("U", 60, "roxanne", 2)];
        assert!(mine_pairs(&logs, &cfg()).unwrap().is_empty());
        let logs = [rec("U", 0, "rocks and", 0), rec("U", 59, "roxanne", 2)];
        assert_eq!(mine_pairs(&logs, &cfg()).unwrap().len(), 1);
    }

    #[test]
    fn identical_after_normalization_is_not_a_pair() {
        let logs = [rec("U", 0, "Rocks And", 0), rec("U", 10, "rocks  and", 1)];
        assert!(mine_pairs(&logs, &cfg()).unwrap().is_empty());
    }

    #[test]
    fn takes_first_successful_follow_up_only() {
        let logs = [
            rec("U", 0, "how stores", 0),
            rec("U", 5, "how stores near me", 0),
            rec("U", 10, "house tours", 1),
            rec("U", 20, "house tours tickets", 1),
        ];
        let pairs = mine_pairs(&logs, &cfg()).unwrap();
        let got: Vec<_> = pairs.iter().map(|p| (p.q1.as_str(), p.q2.as_str())).collect();
        assert_eq!(got, [("how stores", "house tours"), ("how stores near me", "house tours")]);
    }

    #[test]
    fn users_do_not_mix() {
        let logs = [rec("A", 0, "rocks and", 0), rec("B", 10, "roxanne", 1)];
        assert!(mine_pairs(&logs, &cfg()).unwrap().is_empty());
    }

    #[test]
    fn same_timestamp_is_skipped() {
        let logs = [rec("U", 5, "rocks and", 0), rec("U", 5, "roxanne", 1), rec("U", 8, "roxanne songs", 1)];
        let pairs = mine_pairs(&logs, &cfg()).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].q2.as_str(), "roxanne songs");
    }

    #[test]
    fn rejects_unsorted_streams() {
        let logs = [rec("U", 30, "roxanne", 1), rec("V", 0, "x", 0), rec("U", 0, "rocks and", 0)];
        assert!(matches!(mine_pairs(&logs, &cfg()), Err(Error::Unsorted { .. })));
    }
}
