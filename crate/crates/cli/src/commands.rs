use std::borrow::Cow;
use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, Write as _};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use mondegreen_core::eval::{
    ab_metrics, build_test_pairs, corpus_stats, corpus_stats_text, evaluate_sets, open_pairs, rewrite_quality,
    split_holdout, write_pairs, AbComparison, AbMetrics, AbOptions, Scope,
};
use mondegreen_core::log::{read_logs, write_logs};
use mondegreen_core::serving::{http, Corrector};
use mondegreen_core::simulator::{
    generate_logs, generate_logs_with, mine_confusions, seed_words, validate_confusions, ConfusionLexicon,
    GroundTruth, MiningSpec, SEED_PAIRS, TEMPLATES,
};
use mondegreen_core::trainer::{build_rewrite_table, build_tables, load_snapshot, mine_pairs, write_snapshot};
use mondegreen_core::{AsrParty, Error, PronouncingLexicon, QueryLogRecord, RewriteTable};
use serde::Serialize;
use serde_json::json;
use tracing::{info, warn};

use crate::config::AppConfig;
use crate::{exit, Cli, Command, EvalCommand, MineArgs, ScopeArg, ServeArgs, SimulateArgs, StatsArgs, TrainArgs};

#[derive(Debug)]
struct MissingFile {
    what: &'static str,
    path: PathBuf,
}

impl fmt::Display for MissingFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} file not found: {}", self.what, self.path.display())
    }
}

impl std::error::Error for MissingFile {}

#[derive(Debug)]
struct InvalidConfig(String);

impl fmt::Display for InvalidConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for InvalidConfig {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    InvalidConfig(msg.into()).into()
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<MissingFile>() {
            return exit::MISSING_FILE;
        }
        if cause.is::<InvalidConfig>() {
            return exit::INVALID_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Config(_) => exit::INVALID_CONFIG,
                Error::SnapshotMissing(_) => exit::MISSING_FILE,
                Error::Io(io) if io.kind() == io::ErrorKind::NotFound => exit::MISSING_FILE,
                Error::Io(_) | Error::EmptyInput(_) => exit::FAILURE,
                _ => exit::MALFORMED_INPUT,
            };
        }
        if let Some(io) = cause.downcast_ref::<io::Error>() {
            if io.kind() == io::ErrorKind::NotFound {
                return exit::MISSING_FILE;
            }
        }
    }
    exit::FAILURE
}

pub fn run(cli: Cli) -> Result<()> {
    let config = AppConfig::load(cli.config.as_deref())?;
    let lexicon_path = cli.lexicon.or_else(|| config.paths.lexicon.clone());
    let lex = || load_lexicon(lexicon_path.as_deref());
    match cli.command {
        Command::Simulate(args) => simulate(config, args, &*lex()?),
        Command::Train(args) => train(config, args, &*lex()?),
        Command::Serve(args) => serve(config, args),
        Command::Eval(cmd) => eval(config, cmd, &*lex()?),
        Command::Stats(args) => stats(config, args),
        Command::MineConfusions(args) => mine(args, &*lex()?),
    }
}

fn load_lexicon(path: Option<&Path>) -> Result<Cow<'static, PronouncingLexicon>> {
    match path {
        None => Ok(Cow::Borrowed(PronouncingLexicon::bundled())),
        Some(p) => {
            exists(p, "lexicon")?;
            let lex = PronouncingLexicon::open(p).with_context(|| format!("reading lexicon {}", p.display()))?;
            Ok(Cow::Owned(lex))
        }
    }
}

fn exists(path: &Path, what: &'static str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(MissingFile {
            what,
            path: path.to_owned(),
        }
        .into())
    }
}

fn pick(flag: Option<PathBuf>, configured: &Option<PathBuf>, what: &str, hint: &str) -> Result<PathBuf> {
    flag.or_else(|| configured.clone())
        .ok_or_else(|| invalid(format!("no {what} path given (use {hint})")))
}

fn read_log_file(path: &Path) -> Result<Vec<QueryLogRecord>> {
    exists(path, "log")?;
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_logs(BufReader::new(file)).with_context(|| format!("reading logs {}", path.display()))
}

fn read_snapshot(path: &Path) -> Result<RewriteTable> {
    exists(path, "snapshot")?;
    load_snapshot(path).with_context(|| format!("loading snapshot {}", path.display()))
}

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| e.error)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn emit<T: Serialize>(as_json: bool, value: &T, text: impl FnOnce() -> String) -> Result<()> {
    if as_json {
        println!("{}", serde_json::to_string_pretty(value)?);
    } else {
        print!("{}", text());
    }
    Ok(())
}

fn pct(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_owned(), |v| format!("{:.2}%", 100.0 * v))
}

// ---------------------------------------------------------------- simulate

fn simulate(config: AppConfig, args: SimulateArgs, lex: &PronouncingLexicon) -> Result<()> {
    let mut sim = config.sim;
    if let Some(v) = args.seed {
        sim.seed = v;
    }
    if let Some(v) = args.sessions {
        sim.n_sessions = v;
    }
    if let Some(v) = args.users {
        sim.n_users = v;
    }
    if let Some(v) = args.vocab_size {
        sim.vocab_size = v;
    }
    sim.validate().map_err(|e| invalid(e.to_string()))?;
    let out = pick(args.out, &config.paths.logs, "log output", "--out or [paths] logs")?;
    let truth_path = args.truth.or(config.paths.truth);

    let confusions = match args.confusions.or(config.paths.confusions) {
        None => ConfusionLexicon::bundled(),
        Some(p) => {
            exists(&p, "confusion lexicon")?;
            ConfusionLexicon::open(&p).with_context(|| format!("reading confusions {}", p.display()))?
        }
    };
    let report = validate_confusions(confusions.entries(), lex, confusions.max_distance());
    if !report.is_valid() {
        warn!(
            "{} of {} confusion pairs exceed the declared distance {}",
            report.flagged.len(),
            report.checked,
            report.bound
        );
    }

    let output = match args.treatment {
        None => generate_logs(&sim, &confusions)?,
        Some(p) => {
            let table = read_snapshot(&p)?;
            info!("treatment arm rewrites with {} ({} entries)", table.version_tag(), table.len());
            generate_logs_with(&sim, &confusions, |q| table.get(q.as_str()).map(|e| e.correction.clone()))?
        }
    };

    let mut buf = Vec::new();
    write_logs(&mut buf, &output.records)?;
    write_atomic(&out, &buf)?;
    if let Some(p) = &truth_path {
        write_atomic(p, output.truth.to_file_string().as_bytes())?;
    }

    let s = &output.stats;
    println!(
        "simulated {} sessions (seed {}): {} records, {} retries, {} rewritten",
        s.sessions, sim.seed, s.records, s.retries, s.rewritten
    );
    println!(
        "corruption rate: 1P {} of {} sessions, 3P {} of {} sessions",
        pct(s.corruption_rate(AsrParty::FirstParty)),
        s.sessions_1p,
        pct(s.corruption_rate(AsrParty::ThirdParty)),
        s.sessions_3p
    );
    println!("logs: {}", out.display());
    if let Some(p) = truth_path {
        println!("truth: {} ({} corrupted queries)", p.display(), output.truth.len());
    }
    Ok(())
}

// ---------------------------------------------------------------- train

fn train(config: AppConfig, args: TrainArgs, lex: &PronouncingLexicon) -> Result<()> {
    let mut trainer = config.trainer;
    if let Some(v) = args.alpha {
        trainer.alpha = v;
    }
    if let Some(v) = args.beta {
        trainer.beta = v;
    }
    if let Some(v) = args.tau {
        trainer.tau = v;
    }
    if let Some(v) = args.t_window {
        trainer.t_window = v;
    }
    if let Some(v) = args.min_count {
        trainer.min_query_count = v;
    }
    if let Some(v) = args.abandonment {
        trainer.abandonment = v;
    }
    if args.tau_normalized.is_some() {
        trainer.tau_normalized = args.tau_normalized;
    }
    trainer.validate().map_err(|e| invalid(e.to_string()))?;
    if !(0.0..1.0).contains(&args.holdout) {
        return Err(invalid(format!("--holdout must be in [0, 1), got {}", args.holdout)));
    }
    if args.pairs_out.is_some() && args.holdout == 0.0 {
        return Err(invalid("--pairs-out needs --holdout above 0"));
    }
    let logs_path = pick(args.logs, &config.paths.logs, "log", "--logs or [paths] logs")?;
    let out = pick(args.out, &config.paths.snapshot, "snapshot output", "--out or [paths] snapshot")?;
    let seed = args.seed.unwrap_or(config.sim.seed);

    let records = read_log_file(&logs_path)?;
    if records.is_empty() {
        warn!("{} has no records; writing an empty snapshot", logs_path.display());
    }
    let (train_set, held_out) = if args.holdout > 0.0 {
        split_holdout(&records, args.holdout, seed)
    } else {
        (records, Vec::new())
    };

    let pairs = mine_pairs(&train_set, &trainer)?;
    let tables = build_tables(&train_set, &pairs, trainer.abandonment);
    let table = build_rewrite_table(&tables, &trainer, lex);
    write_snapshot(&table, &out).with_context(|| format!("writing snapshot {}", out.display()))?;

    println!(
        "trained on {} records ({} held out): {} correction pairs, {} distinct queries, {} rewrites",
        train_set.len(),
        held_out.len(),
        pairs.len(),
        tables.distinct_queries(),
        table.len()
    );
    println!("snapshot: {} ({})", out.display(), table.version_tag());
    if let Some(p) = args.pairs_out {
        let test = build_test_pairs(&held_out, &trainer, seed)?;
        if test.is_empty() {
            warn!("held-out users produced no test pairs");
        }
        write_atomic(&p, write_pairs(&test).as_bytes())?;
        println!("test pairs: {} ({} pairs)", p.display(), test.len());
    }
    Ok(())
}

// ---------------------------------------------------------------- serve

fn serve(config: AppConfig, args: ServeArgs) -> Result<()> {
    let path = pick(args.snapshot, &config.paths.snapshot, "snapshot", "--snapshot or [paths] snapshot")?;
    let listen = args.listen.unwrap_or(config.serve.listen);
    let table = read_snapshot(&path)?;
    let (tag, entries) = (table.version_tag().to_owned(), table.len());
    let corrector = Arc::new(Corrector::new(table));

    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&listen)
            .await
            .with_context(|| format!("binding {listen}"))?;
        info!("serving {entries} rewrites ({tag}) on {}", listener.local_addr()?);
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            info!("shutting down");
        };
        http::serve(listener, corrector, shutdown).await?;
        Ok(())
    })
}

// ---------------------------------------------------------------- eval

fn eval(config: AppConfig, cmd: EvalCommand, lex: &PronouncingLexicon) -> Result<()> {
    match cmd {
        EvalCommand::Bleu { pairs, snapshot, json } => {
            exists(&pairs, "pairs")?;
            let mut pairs = open_pairs(&pairs).with_context(|| format!("reading pairs {}", pairs.display()))?;
            if pairs.is_empty() {
                warn!("no test pairs; nothing to score");
                return Ok(());
            }
            let corrector = match snapshot.or(config.paths.snapshot) {
                Some(p) => Corrector::new(read_snapshot(&p)?),
                None => {
                    warn!("no snapshot given; scoring without corrections");
                    Corrector::without_table()
                }
            };
            let scores = evaluate_sets(&mut pairs, &corrector)?;
            emit(json, &scores, || scores.to_text())
        }
        EvalCommand::Ab {
            control,
            treatment,
            snapshot,
            scope,
            threshold,
            window,
            json,
        } => {
            let control = read_log_file(&control)?;
            let treatment = read_log_file(&treatment)?;
            if control.is_empty() || treatment.is_empty() {
                warn!("control or treatment logs are empty; nothing to compare");
                return Ok(());
            }
            let table = snapshot.map(|p| read_snapshot(&p)).transpose()?;
            let scope = match (scope, &table) {
                (Some(ScopeArg::All), _) | (None, None) => Scope::All,
                (Some(ScopeArg::Triggered), None) => return Err(invalid("--scope triggered needs --snapshot")),
                (_, Some(_)) => Scope::Triggered,
            };
            let opts = AbOptions {
                table: table.as_ref(),
                scope,
                threshold: threshold.unwrap_or(config.trainer.tau),
                window: window.unwrap_or(config.trainer.t_window),
            };
            let cmp = AbComparison::new(ab_metrics(&control, &opts, lex)?, ab_metrics(&treatment, &opts, lex)?);
            emit(json, &cmp, || ab_text(&cmp, scope))
        }
        EvalCommand::Stats { corpus, logs, json } => {
            let stats = if let Some(p) = corpus {
                exists(&p, "corpus")?;
                let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                corpus_stats_text(&text)
            } else {
                let records = read_log_file(logs.as_deref().expect("clap requires --corpus or --logs"))?;
                corpus_stats(records.iter().map(|r| r.query()))
            };
            let stats = match stats {
                Ok(s) => s,
                Err(Error::EmptyInput(_)) => {
                    warn!("corpus is empty");
                    return Ok(());
                }
                Err(e) => return Err(e.into()),
            };
            emit(json, &stats, || {
                format!(
                    "queries           {}\ndistinct          {}\navg length words  {:.3}\n",
                    stats.query_count, stats.distinct_count, stats.avg_length_words
                )
            })
        }
        EvalCommand::Truth {
            snapshot,
            truth,
            logs,
            json,
        } => {
            let snap = pick(snapshot, &config.paths.snapshot, "snapshot", "--snapshot or [paths] snapshot")?;
            let truth = pick(truth, &config.paths.truth, "truth", "--truth or [paths] truth")?;
            let table = read_snapshot(&snap)?;
            exists(&truth, "truth")?;
            let truth = GroundTruth::open(&truth).with_context(|| format!("reading truth {}", truth.display()))?;
            let pairs = match logs.or(config.paths.logs) {
                Some(p) => mine_pairs(&read_log_file(&p)?, &config.trainer)?,
                None => Vec::new(),
            };
            let q = rewrite_quality(&table, &truth, &pairs);
            emit(json, &q, || {
                format!(
                    "rewrites          {}\ncorrect           {} ({})\nretried types     {}\ncovered           {} ({})\n",
                    q.entries,
                    q.correct,
                    pct(q.precision),
                    q.retried_types,
                    q.covered,
                    pct(q.coverage)
                )
            })
        }
    }
}

type AbRow = (&'static str, fn(&AbMetrics) -> f64, Option<f64>);

fn ab_text(cmp: &AbComparison, scope: Scope) -> String {
    let change = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |v| format!("{v:+.2}%"));
    let rows: [AbRow; 5] = [
        ("ctr", |m| m.ctr, cmp.ctr_change_pct),
        ("user_interaction_rate", |m| m.user_interaction_rate, cmp.user_interaction_change_pct),
        ("abandoned_pct", |m| m.abandoned_pct, cmp.abandoned_change_pct),
        ("refinement_pct", |m| m.refinement_pct, cmp.refinement_change_pct),
        ("trigger_rate_pct", |m| m.trigger_rate_pct, None),
    ];
    let scope = match scope {
        Scope::All => "all",
        Scope::Triggered => "triggered",
    };
    let mut out = format!(
        "scope: {scope} ({} control, {} treatment queries)\n{:<24} {:>10} {:>10} {:>10}\n",
        cmp.control.queries, cmp.treatment.queries, "metric", "control", "treatment", "change"
    );
    for (name, get, delta) in rows {
        out.push_str(&format!(
            "{name:<24} {:>10.4} {:>10.4} {:>10}\n",
            get(&cmp.control),
            get(&cmp.treatment),
            change(delta)
        ));
    }
    out
}

// ---------------------------------------------------------------- stats

fn stats(config: AppConfig, args: StatsArgs) -> Result<()> {
    if let Some(p) = args.logs {
        let records = read_log_file(&p)?;
        if records.is_empty() {
            warn!("{} has no records", p.display());
            return Ok(());
        }
        let users: BTreeSet<&str> = records.iter().map(|r| r.user_id()).collect();
        let zero = records.iter().filter(|r| !r.successful()).count();
        let corpus = corpus_stats(records.iter().map(|r| r.query()))?;
        let (first, last) = (
            records.iter().map(|r| r.timestamp()).min().unwrap_or(0),
            records.iter().map(|r| r.timestamp()).max().unwrap_or(0),
        );
        let value = json!({
            "records": records.len(),
            "users": users.len(),
            "distinct_queries": corpus.distinct_count,
            "zero_click_pct": 100.0 * zero as f64 / records.len() as f64,
            "avg_length_words": corpus.avg_length_words,
            "first_timestamp": first,
            "last_timestamp": last,
        });
        return emit(args.json, &value, || {
            format!(
                "records           {}\nusers             {}\ndistinct queries  {}\nzero-click        {:.2}%\navg length words  {:.3}\ntime span         {first}..{last}\n",
                records.len(),
                users.len(),
                corpus.distinct_count,
                100.0 * zero as f64 / records.len() as f64,
                corpus.avg_length_words
            )
        });
    }
    let path = pick(args.snapshot, &config.paths.snapshot, "snapshot", "--snapshot, --logs or [paths] snapshot")?;
    let table = read_snapshot(&path)?;
    let meta = table.metadata();
    let value = json!({
        "table_version": table.version_tag(),
        "format_version": meta.version,
        "entries": table.len(),
        "records": meta.records,
        "built_at": meta.built_at,
        "config": meta.config,
    });
    emit(args.json, &value, || {
        format!(
            "table version     {}\nformat version    {}\nentries           {}\ntrained records   {}\nbuilt at          {}\nalpha {} beta {} tau {} t {} min_count {} abandonment {}\n",
            table.version_tag(),
            meta.version,
            table.len(),
            meta.records,
            meta.built_at,
            meta.config.alpha,
            meta.config.beta,
            meta.config.tau,
            meta.config.t_window,
            meta.config.min_query_count,
            meta.config.abandonment.as_str()
        )
    })
}

// ---------------------------------------------------------------- mine-confusions

fn mine(args: MineArgs, lex: &PronouncingLexicon) -> Result<()> {
    let owned: Vec<String>;
    let words: Vec<&str> = match &args.seed_words {
        None => seed_words(),
        Some(p) => {
            exists(p, "seed words")?;
            owned = std::fs::read_to_string(p)?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_owned)
                .collect();
            owned.iter().map(String::as_str).collect()
        }
    };
    let spec = MiningSpec {
        seed_pairs: SEED_PAIRS,
        words: &words,
        templates: TEMPLATES,
        templates_per_word: args.templates_per_word,
        corruptions_per_word: args.corruptions_per_word,
        bound: args.bound,
    };
    let confusions = mine_confusions(lex, &spec)?;
    write_atomic(&args.out, confusions.to_file_string().as_bytes())?;
    println!(
        "mined {} confusion pairs for {} phrases from {} words -> {}",
        confusions.len(),
        confusions.grouped().len(),
        words.len(),
        args.out.display()
    );
    Ok(())
}
