mod commands;
mod config;

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use mondegreen_core::trainer::{AbandonmentMode, SNAPSHOT_VERSION};
use mondegreen_core::Fraction;
use tracing_subscriber::EnvFilter;

/// Exit codes besides 0 (success) and 2 (bad usage, from clap).
pub mod exit {
    pub const FAILURE: u8 = 1;
    pub const INVALID_CONFIG: u8 = 3;
    pub const MISSING_FILE: u8 = 4;
    pub const MALFORMED_INPUT: u8 = 5;
}

#[derive(Debug, Parser)]
#[command(name = "mondegreen", about = "Mine, train, serve and evaluate voice-query rewrites")]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Pronouncing lexicon (word<TAB>phonemes); defaults to the bundled one.
    #[arg(long, global = true, value_name = "FILE")]
    lexicon: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic query logs and their ground truth.
    Simulate(SimulateArgs),
    /// Mine correction pairs from logs and write a rewrite snapshot.
    Train(TrainArgs),
    /// Serve corrections over HTTP from a snapshot.
    Serve(ServeArgs),
    /// Offline evaluation reports.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Summarize a snapshot or a log file.
    Stats(StatsArgs),
    /// Build a confusion lexicon from the pronouncing lexicon.
    MineConfusions(MineArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Log file to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ground-truth sidecar to write (corrupted<TAB>true).
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sessions: Option<u64>,
    #[arg(long)]
    users: Option<u32>,
    #[arg(long)]
    vocab_size: Option<usize>,
    /// Confusion lexicon; defaults to the bundled one.
    #[arg(long)]
    confusions: Option<PathBuf>,
    /// Simulate a treatment arm: transcriptions are rewritten with this
    /// snapshot before searching.
    #[arg(long, value_name = "SNAPSHOT")]
    treatment: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    logs: Option<PathBuf>,
    /// Snapshot file to write.
    #[arg(long, visible_alias = "snapshot")]
    out: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<Fraction>,
    #[arg(long)]
    beta: Option<Fraction>,
    #[arg(long)]
    tau: Option<u32>,
    /// Pairing window in seconds.
    #[arg(long = "t", visible_alias = "window")]
    t_window: Option<u64>,
    #[arg(long)]
    min_count: Option<u64>,
    #[arg(long, value_parser = parse_mode)]
    abandonment: Option<AbandonmentMode>,
    /// Compare length-normalized distance against this value instead of tau.
    #[arg(long)]
    tau_normalized: Option<f64>,
    /// Share of users held out from training.
    #[arg(long, default_value_t = 0.0)]
    holdout: f64,
    /// Write test pairs built from the held-out users here.
    #[arg(long)]
    pairs_out: Option<PathBuf>,
    /// Seed for the holdout split and identity-pair sampling.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    snapshot: Option<PathBuf>,
    #[arg(long)]
    listen: Option<String>,
}

#[derive(Debug, Subcommand)]
enum EvalCommand {
    /// BLEU on the complete and triggered sets.
    Bleu {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Control vs treatment log metrics.
    Ab {
        #[arg(long)]
        control: PathBuf,
        #[arg(long)]
        treatment: PathBuf,
        /// Table defining the triggered subset.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Defaults to `triggered` when a snapshot is given.
        #[arg(long, value_enum)]
        scope: Option<ScopeArg>,
        #[arg(long)]
        threshold: Option<u32>,
        #[arg(long)]
        window: Option<u64>,
        #[arg(long)]
        json: bool,
    },
    /// Query length statistics.
    Stats {
        /// Plain text, one query per line.
        #[arg(long, conflicts_with = "logs", required_unless_present = "logs")]
        corpus: Option<PathBuf>,
        #[arg(long)]
        logs: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Check a snapshot against simulator ground truth.
    Truth {
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Training logs, to measure coverage of retried corruptions.
        #[arg(long)]
        logs: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScopeArg {
    All,
    Triggered,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long, conflicts_with = "logs")]
    snapshot: Option<PathBuf>,
    #[arg(long)]
    logs: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct MineArgs {
    #[arg(long)]
    out: PathBuf,
    /// Words to mishear, one per line; defaults to the bundled list.
    #[arg(long)]
    seed_words: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    bound: u32,
    #[arg(long, default_value_t = 2)]
    templates_per_word: usize,
    #[arg(long, default_value_t = 2)]
    corruptions_per_word: usize,
}

fn parse_mode(s: &str) -> Result<AbandonmentMode, String> {
    s.parse().map_err(|e: mondegreen_core::Error| e.to_string())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .with_target(false)
        .init();

    let version: &'static str = Box::leak(
        format!("{} (snapshot format v{SNAPSHOT_VERSION})", env!("CARGO_PKG_VERSION")).into_boxed_str(),
    );
    let matches = Cli::command().version(version).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
