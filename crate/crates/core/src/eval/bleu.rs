//! BLEU over whitespace tokens.
//!
//! Variant: clipped n-gram precision for n = 1..=N with N = min(4, candidate
//! length), uniform geometric mean, brevity penalty `exp(1 - r/c)` when the
//! candidate is not longer than the reference. Unigram precision is
//! unsmoothed; for n >= 2 one is added to both matches and totals.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::query::NormalizedQuery;

pub const MAX_ORDER: usize = 4;

/// Pooled n-gram statistics. Adding the stats of several pairs and scoring
/// the sum gives corpus BLEU.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub candidate_len: u64,
    pub reference_len: u64,
}

impl BleuStats {
    pub fn of(candidate: &NormalizedQuery, reference: &NormalizedQuery) -> Self {
        let c: Vec<&str> = candidate.words().collect();
        let r: Vec<&str> = reference.words().collect();
        let mut stats = BleuStats {
            candidate_len: c.len() as u64,
            reference_len: r.len() as u64,
            ..Default::default()
        };
        for n in 1..=MAX_ORDER.min(c.len()) {
            let mut ref_counts: HashMap<&[&str], u64> = HashMap::new();
            for g in r.windows(n) {
                *ref_counts.entry(g).or_default() += 1;
            }
            let mut matched = 0;
            for g in c.windows(n) {
                if let Some(left) = ref_counts.get_mut(g) {
                    if *left > 0 {
                        *left -= 1;
                        matched += 1;
                    }
                }
            }
            stats.matches[n - 1] = matched;
            stats.totals[n - 1] = (c.len() + 1 - n) as u64;
        }
        stats
    }

    pub fn add(&mut self, other: &BleuStats) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.candidate_len += other.candidate_len;
        self.reference_len += other.reference_len;
    }

    pub fn score(&self) -> f64 {
        let order = self.totals.iter().take_while(|&&t| t > 0).count();
        if order == 0 || self.matches[0] == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        for n in 0..order {
            let p = if n == 0 {
                self.matches[0] as f64 / self.totals[0] as f64
            } else {
                (self.matches[n] + 1) as f64 / (self.totals[n] + 1) as f64
            };
            log_sum += p.ln();
        }
        let precision = (log_sum / order as f64).exp();
        let bp = if self.candidate_len > self.reference_len {
            1.0
        } else {
            (1.0 - self.reference_len as f64 / self.candidate_len as f64).exp()
        };
        bp * precision
    }
}

pub fn sentence_bleu(candidate: &NormalizedQuery, reference: &NormalizedQuery) -> f64 {
    BleuStats::of(candidate, reference).score()
}

/// Pooled corpus BLEU over `(candidate, reference)` pairs.
pub fn corpus_bleu<'a, I>(pairs: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a NormalizedQuery, &'a NormalizedQuery)>,
{
    let mut total = BleuStats::default();
    let mut any = false;
    for (c, r) in pairs {
        total.add(&BleuStats::of(c, r));
        any = true;
    }
    if !any {
        return Err(Error::EmptyInput("corpus_bleu needs at least one pair"));
    }
    Ok(total.score())
}
