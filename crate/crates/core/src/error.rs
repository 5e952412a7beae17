use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty query")]
    EmptyQuery,

    #[error("malformed log line {line}: {reason}")]
    LogParse { line: usize, reason: String },

    #[error("invalid log record: {0}")]
    InvalidRecord(String),

    #[error("records for user {user:?} are not sorted by timestamp ({previous} then {next})")]
    Unsorted { user: String, previous: u64, next: u64 },

    #[error("malformed lexicon line {line}: {reason}")]
    LexiconParse { line: usize, reason: String },

    #[error("snapshot not found: {}", .0.display())]
    SnapshotMissing(PathBuf),

    #[error("corrupt snapshot line {line}: {reason}")]
    SnapshotCorrupt { line: usize, reason: String },

    #[error("unsupported snapshot version {found:?} (expected {expected})")]
    SnapshotVersion { found: String, expected: u32 },

    #[error("malformed confusion lexicon line {line}: {reason}")]
    ConfusionParse { line: usize, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    EmptyInput(&'static str),

    #[error(transparent)]
    Io(#[from] io::Error),
}
