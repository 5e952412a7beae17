//! Synthetic voice-search logs with a phrase-level ASR error channel and
//! known ground truth.
//!
//! Each session draws a user, a true query (Zipf over the vocabulary), and
//! runs it through the user's ASR: with the party's error rate the
//! transcription is replaced by one of the phrase's confusions. Clicks follow
//! whether the *searched* text is the true query. An unclicked wrong search
//! is retried with the true query with probability `p_retry`.
//!
//! Every session consumes the same random draws whatever happens, so a
//! control run and a treatment run with the same seed see identical users,
//! queries, errors and dice rolls.

mod confusions;

pub use confusions::{
    mine_confusions, seed_words, validate_confusions, ConfusionLexicon, ConfusionReport, FlaggedPair,
    MiningSpec, SEED_PAIRS, TEMPLATES,
};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::query::{normalize, AsrParty, NormalizedQuery, QueryLogRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub n_users: u32,
    pub n_sessions: u64,
    /// Distinct true queries, taken in order from the confusion lexicon.
    pub vocab_size: usize,
    pub zipf_s: f64,
    pub p_err_1p: f64,
    pub p_err_3p: f64,
    pub p_retry: f64,
    pub retry_dt_max: u64,
    pub p_click_true: f64,
    pub p_click_corrupt: f64,
    /// Share of users whose ASR is third-party.
    pub p_third_party: f64,
    /// Chance a clicked query also gets an extended interaction.
    pub p_extended: f64,
    /// Mean idle time between a user's sessions, in seconds.
    pub mean_session_gap: f64,
    pub start_time: u64,
    /// Must match the trainer's window; retries land inside it.
    pub t_window: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 42,
            n_users: 10_000,
            n_sessions: 100_000,
            vocab_size: 300,
            zipf_s: 1.0,
            p_err_1p: 0.05,
            p_err_3p: 0.15,
            p_retry: 0.7,
            retry_dt_max: 30,
            p_click_true: 0.85,
            p_click_corrupt: 0.05,
            p_third_party: 0.75,
            p_extended: 0.5,
            mean_session_gap: 3600.0,
            start_time: 1_600_000_000,
            t_window: 60,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("p_err_1p", self.p_err_1p),
            ("p_err_3p", self.p_err_3p),
            ("p_retry", self.p_retry),
            ("p_click_true", self.p_click_true),
            ("p_click_corrupt", self.p_click_corrupt),
            ("p_third_party", self.p_third_party),
            ("p_extended", self.p_extended),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        if self.n_users == 0 {
            return Err(Error::Config("n_users must be positive".into()));
        }
        if self.vocab_size == 0 {
            return Err(Error::Config("vocab_size must be positive".into()));
        }
        if !(self.zipf_s.is_finite() && self.zipf_s > 0.0) {
            return Err(Error::Config(format!("zipf_s must be > 0, got {}", self.zipf_s)));
        }
        if !(self.mean_session_gap.is_finite() && self.mean_session_gap > 0.0) {
            return Err(Error::Config("mean_session_gap must be > 0".into()));
        }
        if self.retry_dt_max == 0 || self.retry_dt_max >= self.t_window {
            return Err(Error::Config(format!(
                "retry_dt_max must be in [1, t_window), got {} with t_window {}",
                self.retry_dt_max, self.t_window
            )));
        }
        Ok(())
    }
}

/// Corrupted transcription to the query the user meant.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    map: BTreeMap<NormalizedQuery, NormalizedQuery>,
}

impl GroundTruth {
    pub fn get(&self, corrupted: &str) -> Option<&NormalizedQuery> {
        self.map.get(corrupted)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NormalizedQuery, &NormalizedQuery)> {
        self.map.iter()
    }

    fn insert(&mut self, corrupted: NormalizedQuery, truth: NormalizedQuery) -> Result<()> {
        if corrupted == truth {
            return Err(Error::InvalidRecord(format!("{corrupted:?} maps to itself")));
        }
        match self.map.get(&corrupted) {
            Some(prev) if *prev != truth => Err(Error::InvalidRecord(format!(
                "{corrupted:?} maps to both {prev:?} and {truth:?}"
            ))),
            _ => {
                self.map.insert(corrupted, truth);
                Ok(())
            }
        }
    }

    /// Sidecar format: `corrupted \t true` per line, sorted.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for (c, t) in &self.map {
            let _ = writeln!(out, "{c}\t{t}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_reader(text.as_bytes())
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(BufReader::new(File::open(path)?))
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self> {
        let mut truth = GroundTruth::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| Error::ConfusionParse {
                line: idx + 1,
                reason,
            };
            let (c, t) = line
                .split_once('\t')
                .ok_or_else(|| bad("missing tab separator".into()))?;
            let c = normalize(c).map_err(|e| bad(e.to_string()))?;
            let t = normalize(t).map_err(|e| bad(e.to_string()))?;
            truth.insert(c, t).map_err(|e| bad(e.to_string()))?;
        }
        Ok(truth)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SimStats {
    pub sessions: u64,
    pub records: u64,
    pub sessions_1p: u64,
    pub sessions_3p: u64,
    pub corrupted_1p: u64,
    pub corrupted_3p: u64,
    pub retries: u64,
    /// Sessions where the rewriter changed the transcription.
    pub rewritten: u64,
}

impl SimStats {
    pub fn corruption_rate(&self, party: AsrParty) -> Option<f64> {
        let (n, k) = match party {
            AsrParty::FirstParty => (self.sessions_1p, self.corrupted_1p),
            AsrParty::ThirdParty => (self.sessions_3p, self.corrupted_3p),
        };
        (n > 0).then(|| k as f64 / n as f64)
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    /// Sorted by timestamp, then user.
    pub records: Vec<QueryLogRecord>,
    pub truth: GroundTruth,
    pub stats: SimStats,
}

/// Control run: transcriptions are searched as-is.
pub fn generate_logs(config: &SimConfig, confusions: &ConfusionLexicon) -> Result<SimOutput> {
    generate_logs_with(config, confusions, |_| None)
}

/// Treatment run: `rewrite` sees each transcription and may replace the
/// searched text. Logged text is always the transcription.
pub fn generate_logs_with<F>(config: &SimConfig, confusions: &ConfusionLexicon, rewrite: F) -> Result<SimOutput>
where
    F: Fn(&NormalizedQuery) -> Option<NormalizedQuery>,
{
    config.validate()?;
    let mut vocab = confusions.grouped();
    if config.vocab_size > vocab.len() {
        return Err(Error::Config(format!(
            "vocab_size {} exceeds the {} confusable phrases available",
            config.vocab_size,
            vocab.len()
        )));
    }
    vocab.truncate(config.vocab_size);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let zipf = Zipf::new(vocab.len() as f64, config.zipf_s).map_err(|e| Error::Config(e.to_string()))?;
    let gap = Exp::new(1.0 / config.mean_session_gap).map_err(|e| Error::Config(e.to_string()))?;

    let width = (config.n_users - 1).to_string().len().max(6);
    let users: Vec<(String, AsrParty)> = (0..config.n_users)
        .map(|i| {
            let party = if rng.random::<f64>() < config.p_third_party {
                AsrParty::ThirdParty
            } else {
                AsrParty::FirstParty
            };
            (format!("u{i:0width$}"), party)
        })
        .collect();
    let mut clocks: Vec<u64> = vec![config.start_time; users.len()];

    let mut records = Vec::new();
    let mut truth = GroundTruth::default();
    let mut stats = SimStats::default();

    for _ in 0..config.n_sessions {
        let d = SessionDraws::draw(&mut rng, &zipf, &gap, users.len(), config);
        let (user, party) = &users[d.user];
        let (true_q, corruptions) = &vocab[d.phrase];

        let start = clocks[d.user] + d.gap;
        clocks[d.user] = start + config.retry_dt_max + 1;

        let p_err = match party {
            AsrParty::FirstParty => config.p_err_1p,
            AsrParty::ThirdParty => config.p_err_3p,
        };
        let corrupted = d.err < p_err;
        let heard = if corrupted {
            let c = &corruptions[(d.pick * corruptions.len() as f64) as usize % corruptions.len()];
            truth.insert(c.clone(), true_q.clone())?;
            c
        } else {
            true_q
        };
        match party {
            AsrParty::FirstParty => {
                stats.sessions_1p += 1;
                stats.corrupted_1p += u64::from(corrupted);
            }
            AsrParty::ThirdParty => {
                stats.sessions_3p += 1;
                stats.corrupted_3p += u64::from(corrupted);
            }
        }

        let rewritten = rewrite(heard);
        stats.rewritten += u64::from(rewritten.is_some());
        let searched = rewritten.as_ref().unwrap_or(heard);
        let p_click = if searched == true_q {
            config.p_click_true
        } else {
            config.p_click_corrupt
        };
        let clicks = if d.click < p_click { d.clicks } else { 0 };
        records.push(record(user, *party, start, heard, clicks, d.extended < config.p_extended)?);

        if clicks == 0 && searched != true_q && d.retry < config.p_retry {
            stats.retries += 1;
            records.push(record(
                user,
                *party,
                start + d.retry_dt,
                true_q,
                d.retry_clicks,
                d.retry_extended < config.p_extended,
            )?);
        }
        stats.sessions += 1;
    }

    records.sort_by(|a, b| (a.timestamp(), a.user_id()).cmp(&(b.timestamp(), b.user_id())));
    stats.records = records.len() as u64;
    Ok(SimOutput { records, truth, stats })
}

fn record(
    user: &str,
    party: AsrParty,
    timestamp: u64,
    query: &NormalizedQuery,
    clicks: u32,
    extended: bool,
) -> Result<QueryLogRecord> {
    QueryLogRecord::builder(user, timestamp, query.as_str())
        .asr_source(match party {
            AsrParty::FirstParty => "asr-1p",
            AsrParty::ThirdParty => "asr-3p",
        })
        .asr_party(party)
        .clicks(clicks)
        .extended_interaction(extended && clicks > 0)
        .build()
}

/// Everything random about one session, drawn up front in a fixed order.
struct SessionDraws {
    user: usize,
    gap: u64,
    phrase: usize,
    err: f64,
    pick: f64,
    click: f64,
    clicks: u32,
    extended: f64,
    retry: f64,
    retry_dt: u64,
    retry_clicks: u32,
    retry_extended: f64,
}

impl SessionDraws {
    fn draw(rng: &mut ChaCha8Rng, zipf: &Zipf<f64>, gap: &Exp<f64>, n_users: usize, config: &SimConfig) -> Self {
        let user = rng.random_range(0..n_users);
        let gap_s = gap.sample(rng).min(1e9) as u64;
        let phrase = (zipf.sample(rng) as usize).saturating_sub(1);
        SessionDraws {
            user,
            gap: gap_s,
            phrase,
            err: rng.random(),
            pick: rng.random(),
            click: rng.random(),
            clicks: rng.random_range(1..=3),
            extended: rng.random(),
            retry: rng.random(),
            retry_dt: rng.random_range(1..=config.retry_dt_max),
            retry_clicks: rng.random_range(1..=3),
            retry_extended: rng.random(),
        }
    }
}
