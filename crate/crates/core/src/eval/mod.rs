//! Offline BLEU on complete and triggered sets, A/B-style log metrics,
//! corpus statistics, and ground-truth checks for simulated runs.

mod ab;
mod bleu;

pub use ab::{ab_metrics, detect_refinement, AbComparison, AbMetrics, AbOptions, Scope};
pub use bleu::{corpus_bleu, sentence_bleu, BleuStats, MAX_ORDER};

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::query::{normalize, NormalizedQuery, QueryLogRecord};
use crate::serving::Corrector;
use crate::simulator::GroundTruth;
use crate::trainer::{mine_pairs, CorrectionPair, RewriteTable, TrainerConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalPair {
    pub input_query: NormalizedQuery,
    pub reference: NormalizedQuery,
    pub model_output: NormalizedQuery,
}

impl EvalPair {
    /// Model output starts out as the input (no correction).
    pub fn new(input_query: NormalizedQuery, reference: NormalizedQuery) -> Self {
        EvalPair {
            model_output: input_query.clone(),
            input_query,
            reference,
        }
    }
}

/// `input \t reference` per line.
pub fn write_pairs(pairs: &[EvalPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        let _ = writeln!(out, "{}\t{}", p.input_query, p.reference);
    }
    out
}

pub fn read_pairs(reader: impl BufRead) -> Result<Vec<EvalPair>> {
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| Error::LogParse { line: idx + 1, reason };
        let (input, reference) = line
            .split_once('\t')
            .ok_or_else(|| bad("expected input<TAB>reference".into()))?;
        let input = normalize(input).map_err(|e| bad(e.to_string()))?;
        let reference = normalize(reference).map_err(|e| bad(e.to_string()))?;
        pairs.push(EvalPair::new(input, reference));
    }
    Ok(pairs)
}

pub fn open_pairs(path: impl AsRef<Path>) -> Result<Vec<EvalPair>> {
    read_pairs(BufReader::new(File::open(path)?))
}

/// Stable per-user assignment to the held-out side.
pub fn is_held_out(user_id: &str, fraction: f64, seed: u64) -> bool {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(user_id.as_bytes());
    let digest = h.finalize();
    let mut bucket = [0u8; 8];
    bucket.copy_from_slice(&digest[..8]);
    (u64::from_le_bytes(bucket) % 1_000_000) < (fraction * 1_000_000.0).round() as u64
}

/// Splits by user so no user contributes to both sides. Returns
/// `(train, held_out)`, each keeping the input order.
pub fn split_holdout(records: &[QueryLogRecord], fraction: f64, seed: u64) -> (Vec<QueryLogRecord>, Vec<QueryLogRecord>) {
    records
        .iter()
        .cloned()
        .partition(|r| !is_held_out(r.user_id(), fraction, seed))
}

/// Test set recipe: every mined (abandoned, successful) pair from the held-out
/// logs, plus an equal number of identity pairs drawn from successful
/// queries.
pub fn build_test_pairs(held_out: &[QueryLogRecord], config: &TrainerConfig, seed: u64) -> Result<Vec<EvalPair>> {
    let mined = mine_pairs(held_out, config)?;
    let mut successful: Vec<&QueryLogRecord> = held_out.iter().filter(|r| r.successful()).collect();
    successful.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut pairs: Vec<EvalPair> = mined
        .iter()
        .map(|p| EvalPair::new(p.q1.clone(), p.q2.clone()))
        .collect();
    pairs.extend(
        successful
            .into_iter()
            .take(mined.len())
            .map(|r| EvalPair::new(r.query().clone(), r.query().clone())),
    );
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetScores {
    pub complete: usize,
    pub triggered: usize,
    pub complete_no_correction: f64,
    pub complete_model: f64,
    /// `None` when nothing triggered.
    pub triggered_no_correction: Option<f64>,
    pub triggered_model: Option<f64>,
    pub trigger_rate_pct: f64,
}

impl SetScores {
    pub fn to_text(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |v| format!("{v:.4}"));
        let rows = [
            ("complete", "none", Some(self.complete_no_correction), self.complete),
            ("complete", "rewrite", Some(self.complete_model), self.complete),
            ("triggered", "none", self.triggered_no_correction, self.triggered),
            ("triggered", "rewrite", self.triggered_model, self.triggered),
        ];
        let mut out = format!("{:<10} {:<10} {:>8} {:>8}\n", "set", "correction", "bleu", "pairs");
        for (set, corr, bleu, n) in rows {
            let _ = writeln!(out, "{set:<10} {corr:<10} {:>8} {n:>8}", fmt(bleu));
        }
        let _ = writeln!(out, "trigger rate: {:.2}%", self.trigger_rate_pct);
        out
    }
}

/// Runs every input through `corrector`, fills in `model_output`, and scores
/// the complete and triggered sets with and without correction.
pub fn evaluate_sets(pairs: &mut [EvalPair], corrector: &Corrector) -> Result<SetScores> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("evaluate_sets needs test pairs"));
    }
    let mut triggered = Vec::new();
    for (i, p) in pairs.iter_mut().enumerate() {
        let resp = corrector.correct(p.input_query.as_str())?;
        p.model_output = resp.effective().clone();
        if resp.triggered {
            triggered.push(i);
        }
    }
    let no_corr = |idx: &mut dyn Iterator<Item = &EvalPair>| corpus_bleu(idx.map(|p| (&p.input_query, &p.reference)));
    let model = |idx: &mut dyn Iterator<Item = &EvalPair>| corpus_bleu(idx.map(|p| (&p.model_output, &p.reference)));
    let (tnc, tm) = if triggered.is_empty() {
        (None, None)
    } else {
        (
            Some(no_corr(&mut triggered.iter().map(|&i| &pairs[i]))?),
            Some(model(&mut triggered.iter().map(|&i| &pairs[i]))?),
        )
    };
    Ok(SetScores {
        complete: pairs.len(),
        triggered: triggered.len(),
        complete_no_correction: no_corr(&mut pairs.iter())?,
        complete_model: model(&mut pairs.iter())?,
        triggered_no_correction: tnc,
        triggered_model: tm,
        trigger_rate_pct: crate::serving::trigger_rate(pairs.len() as u64, triggered.len() as u64).unwrap_or(0.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub avg_length_words: f64,
    pub query_count: u64,
    pub distinct_count: u64,
}

pub fn corpus_stats<'a>(queries: impl IntoIterator<Item = &'a NormalizedQuery>) -> Result<CorpusStats> {
    let mut words = 0u64;
    let mut count = 0u64;
    let mut distinct = BTreeSet::new();
    for q in queries {
        words += q.word_count() as u64;
        count += 1;
        distinct.insert(q.as_str());
    }
    if count == 0 {
        return Err(Error::EmptyInput("corpus_stats needs queries"));
    }
    Ok(CorpusStats {
        avg_length_words: words as f64 / count as f64,
        query_count: count,
        distinct_count: distinct.len() as u64,
    })
}

/// Plain-text corpus, one query per line; blank lines skipped.
pub fn corpus_stats_text(text: &str) -> Result<CorpusStats> {
    let queries: Vec<NormalizedQuery> = text.lines().filter_map(|l| normalize(l).ok()).collect();
    corpus_stats(&queries)
}

/// Rewrite table checked against simulator ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewriteQuality {
    pub entries: usize,
    /// Entries whose correction is the true query.
    pub correct: usize,
    pub precision: Option<f64>,
    /// Distinct corrupted queries that were followed by their true query.
    pub retried_types: usize,
    /// Of those, how many the table rewrites.
    pub covered: usize,
    pub coverage: Option<f64>,
}

pub fn rewrite_quality(table: &RewriteTable, truth: &GroundTruth, pairs: &[CorrectionPair]) -> RewriteQuality {
    let correct = table
        .iter()
        .filter(|(q, e)| truth.get(q.as_str()) == Some(&e.correction))
        .count();
    let retried: BTreeSet<&NormalizedQuery> = pairs
        .iter()
        .filter(|p| truth.get(p.q1.as_str()) == Some(&p.q2))
        .map(|p| &p.q1)
        .collect();
    let covered = retried.iter().filter(|q| table.get(q.as_str()).is_some()).count();
    let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
    RewriteQuality {
        entries: table.len(),
        correct,
        precision: ratio(correct, table.len()),
        retried_types: retried.len(),
        covered,
        coverage: ratio(covered, retried.len()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::{RewriteEntry, TableMetadata, SNAPSHOT_VERSION};

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
                        pair_count: 5,
                        ratio: 0.5,
                    },
                )
            }),
            TableMetadata {
                version: SNAPSHOT_VERSION,
                config: TrainerConfig::default(),
                records: 0,
                built_at: 0,
            },
        )
    }

    fn fixture() -> Vec<EvalPair> {
        vec![
            EvalPair::new(q("rocks and"), q("roxanne")),
            EvalPair::new(q("how stores"), q("house tours")),
            EvalPair::new(q("gaming chair"), q("gaming chair")),
            EvalPair::new(q("zebra"), q("zebra")),
        ]
    }

    #[test]
    fn empty_table_triggers_nothing() {
        let mut pairs = fixture();
        let s = evaluate_sets(&mut pairs, &Corrector::new(table(&[]))).unwrap();
        assert_eq!(s.triggered, 0);
        assert_eq!(s.triggered_model, None);
        assert_eq!(s.complete_model, s.complete_no_correction);
    }

    #[test]
    fn inverting_table_is_perfect_on_triggered() {
        let mut pairs = fixture();
        let c = Corrector::new(table(&[("rocks and", "roxanne"), ("how stores", "house tours")]));
        let s = evaluate_sets(&mut pairs, &c).unwrap();
        assert_eq!((s.complete, s.triggered), (4, 2));
        assert_eq!(s.triggered_model, Some(1.0));
        assert_eq!(s.triggered_no_correction, Some(0.0));
        assert_eq!(s.complete_model, 1.0);
        assert_eq!(Some(s.trigger_rate_pct), c.stats().trigger_rate_pct);
        assert_eq!(pairs[0].model_output.as_str(), "roxanne");
        assert!(s.to_text().contains("triggered  rewrite      1.0000"));
    }

    #[test]
    fn pairs_file_round_trip() {
        let pairs = fixture();
        let text = write_pairs(&pairs);
        assert_eq!(read_pairs(text.as_bytes()).unwrap(), pairs);
        assert!(read_pairs("no tab here\n".as_bytes()).is_err());
    }

    #[test]
    fn corpus_lengths() {
        assert_eq!(corpus_stats([&q("gaming chair")]).unwrap().avg_length_words, 2.0);
        let s = corpus_stats_text("a b c\n\nA b c d e\n").unwrap();
        assert_eq!((s.avg_length_words, s.query_count, s.distinct_count), (4.0, 2, 2));
        assert!(corpus_stats_text("\n").is_err());
    }

    #[test]
    fn holdout_is_by_user_and_near_fraction() {
        let held = (0..10_000).filter(|i| is_held_out(&format!("u{i}"), 0.1, 0)).count();
        assert!((900..1100).contains(&held), "{held}");
        assert!(!is_held_out("anyone", 0.0, 0));
        assert!(is_held_out("anyone", 1.0, 0));
    }

    #[test]
    fn test_pairs_are_half_identity() {
        let r = |u: &str, t: u64, text: &str, clicks: u32| QueryLogRecord::builder(u, t, text).clicks(clicks).build().unwrap();
        let records = vec![
            r("a", 10, "rocks and", 0),
            r("a", 20, "roxanne", 1),
            r("b", 10, "zebra", 1),
            r("c", 10, "gaming chair", 2),
        ];
        let pairs = build_test_pairs(&records, &TrainerConfig::default(), 1).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].input_query.as_str(), "rocks and");
        assert_eq!(pairs[1].input_query, pairs[1].reference);
    }
}
