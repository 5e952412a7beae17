//! Canonical query text and the voice-query log record.
//!
//! Every table in the system is keyed on [`NormalizedQuery`], so the
//! normalization rule here is the definition of "the same query": lowercase,
//! trimmed, internal whitespace collapsed to a single space. Punctuation and
//! diacritics are kept as-is.

use std::borrow::Borrow;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Query text in canonical form. Construct with [`normalize`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NormalizedQuery(String);

/// Lowercases, trims and collapses whitespace. Idempotent.
pub fn normalize(raw: &str) -> Result<NormalizedQuery> {
    let mut out = String::with_capacity(raw.len());
    for word in raw.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    if out.is_empty() {
        return Err(Error::EmptyQuery);
    }
    Ok(NormalizedQuery(out))
}

impl NormalizedQuery {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.0.split(' ')
    }

    pub fn word_count(&self) -> usize {
        self.words().count()
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for NormalizedQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for NormalizedQuery {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for NormalizedQuery {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl FromStr for NormalizedQuery {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        normalize(s)
    }
}

impl TryFrom<String> for NormalizedQuery {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        normalize(&s)
    }
}

impl From<NormalizedQuery> for String {
    fn from(q: NormalizedQuery) -> Self {
        q.0
    }
}

/// Which kind of speech recognizer produced the transcription.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AsrParty {
    FirstParty,
    ThirdParty,
}

impl AsrParty {
    pub fn code(self) -> &'static str {
        match self {
            AsrParty::FirstParty => "1P",
            AsrParty::ThirdParty => "3P",
        }
    }
}

impl FromStr for AsrParty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1P" => Ok(AsrParty::FirstParty),
            "3P" => Ok(AsrParty::ThirdParty),
            other => Err(Error::InvalidRecord(format!("unknown ASR party {other:?}"))),
        }
    }
}

/// A query is successful when the user clicked at least one result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Successful,
    Abandoned,
}

pub const DEFAULT_LOCALE: &str = "en-US";

/// One voice query event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryLogRecord {
    user_id: String,
    timestamp: u64,
    raw_text: String,
    query: NormalizedQuery,
    asr_source: String,
    asr_party: AsrParty,
    locale: String,
    clicks: u32,
    extended_interaction: bool,
}

impl QueryLogRecord {
    pub fn builder(
        user_id: impl Into<String>,
        timestamp: u64,
        raw_text: impl Into<String>,
    ) -> RecordBuilder {
        RecordBuilder {
            user_id: user_id.into(),
            timestamp,
            raw_text: raw_text.into(),
            asr_source: String::from("asr"),
            asr_party: AsrParty::FirstParty,
            locale: DEFAULT_LOCALE.to_owned(),
            clicks: 0,
            extended_interaction: false,
        }
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn timestamp(&self) -> u64 {
        self.timestamp
    }

    pub fn raw_text(&self) -> &str {
        &self.raw_text
    }

    /// The normalized form of `raw_text`.
    pub fn query(&self) -> &NormalizedQuery {
        &self.query
    }

    pub fn asr_source(&self) -> &str {
        &self.asr_source
    }

    pub fn asr_party(&self) -> AsrParty {
        self.asr_party
    }

    pub fn locale(&self) -> &str {
        &self.locale
    }

    pub fn clicks(&self) -> u32 {
        self.clicks
    }

    pub fn extended_interaction(&self) -> bool {
        self.extended_interaction
    }

    pub fn successful(&self) -> bool {
        self.clicks >= 1
    }

    pub fn outcome(&self) -> Outcome {
        if self.successful() {
            Outcome::Successful
        } else {
            Outcome::Abandoned
        }
    }
}

#[derive(Debug, Clone)]
pub struct RecordBuilder {
    user_id: String,
    timestamp: u64,
    raw_text: String,
    asr_source: String,
    asr_party: AsrParty,
    locale: String,
    clicks: u32,
    extended_interaction: bool,
}

impl RecordBuilder {
    pub fn asr_source(mut self, source: impl Into<String>) -> Self {
        self.asr_source = source.into();
        self
    }

    pub fn asr_party(mut self, party: AsrParty) -> Self {
        self.asr_party = party;
        self
    }

    pub fn locale(mut self, locale: impl Into<String>) -> Self {
        self.locale = locale.into();
        self
    }

    pub fn clicks(mut self, clicks: u32) -> Self {
        self.clicks = clicks;
        self
    }

    pub fn extended_interaction(mut self, extended: bool) -> Self {
        self.extended_interaction = extended;
        self
    }

    pub fn build(self) -> Result<QueryLogRecord> {
        if self.user_id.is_empty() {
            return Err(Error::InvalidRecord("empty user id".into()));
        }
        if self.extended_interaction && self.clicks == 0 {
            return Err(Error::InvalidRecord(
                "extended interaction requires at least one click".into(),
            ));
        }
        let query = normalize(&self.raw_text)
            .map_err(|_| Error::InvalidRecord("transcription is empty".into()))?;
        Ok(QueryLogRecord {
            user_id: self.user_id,
            timestamp: self.timestamp,
            raw_text: self.raw_text,
            query,
            asr_source: self.asr_source,
            asr_party: self.asr_party,
            locale: self.locale,
            clicks: self.clicks,
            extended_interaction: self.extended_interaction,
        })
    }
}
