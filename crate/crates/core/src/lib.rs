//! Statistical correction of speech-recognition errors in voice search
//! queries, working purely on transcribed text.
//!
//! The pipeline mines (abandoned, successful) query pairs from logs, keeps the
//! phonetically close and frequent ones, and stores the single best rewrite
//! per query in a table that is served with a hash lookup.

pub mod error;
pub mod eval;
pub mod fraction;
pub mod log;
pub mod phonetics;
pub mod query;
pub mod serving;
pub mod simulator;
pub mod trainer;

pub use error::{Error, Result};
pub use fraction::Fraction;
pub use phonetics::{
    g2p, phonetic_distance, query_phonetic_distance, Phoneme, PhonemeSequence, PhoneticEncoder,
    PronouncingLexicon,
};
pub use query::{normalize, AsrParty, NormalizedQuery, Outcome, QueryLogRecord};
pub use trainer::{
    build_rewrite_table, build_tables, candidate_set, mine_pairs, CountTables, RewriteTable,
    TrainerConfig,
};
