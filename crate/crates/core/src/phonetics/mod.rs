//! Phoneme sequences and phonetic edit distance.
//!
//! Queries are encoded word by word and the word pronunciations are
//! concatenated with no boundary token, so a resegmentation such as
//! "rocks and" / "roxanne" lands one edit apart.

mod lexicon;
mod rules;

use std::fmt;
use std::str::FromStr;

pub use lexicon::PronouncingLexicon;

use crate::error::{Error, Result};
use crate::query::NormalizedQuery;

/// ARPAbet inventory without stress markers.
pub const INVENTORY: [&str; 39] = [
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH", "EH", "ER", "EY", "F", "G", "HH",
    "IH", "IY", "JH", "K", "L", "M", "N", "NG", "OW", "OY", "P", "R", "S", "SH", "T", "TH", "UH",
    "UW", "V", "W", "Y", "Z", "ZH",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Phoneme(u8);

impl Phoneme {
    /// Looks up an ARPAbet symbol. A trailing stress digit is accepted and
    /// dropped.
    pub fn from_symbol(symbol: &str) -> Option<Phoneme> {
        let bare = symbol.trim_end_matches(|c: char| c.is_ascii_digit());
        INVENTORY
            .iter()
            .position(|s| *s == bare)
            .map(|i| Phoneme(i as u8))
    }

    pub fn from_index(index: usize) -> Option<Phoneme> {
        (index < INVENTORY.len()).then_some(Phoneme(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn symbol(self) -> &'static str {
        INVENTORY[self.0 as usize]
    }
}

impl fmt::Display for Phoneme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Ordered phonemes; displayed space-separated (`R AA K S AE N`).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct PhonemeSequence(Vec<Phoneme>);

impl PhonemeSequence {
    pub fn new(tokens: Vec<Phoneme>) -> Self {
        PhonemeSequence(tokens)
    }

    pub fn tokens(&self) -> &[Phoneme] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for PhonemeSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(p.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PhonemeSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split_whitespace()
            .map(|sym| {
                Phoneme::from_symbol(sym)
                    .ok_or_else(|| Error::Config(format!("unknown phoneme {sym:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(PhonemeSequence)
    }
}

/// Grapheme-to-phoneme conversion. Implementations must be deterministic.
pub trait PhoneticEncoder: Send + Sync {
    /// Appends the pronunciation of one word to `out`.
    fn encode_word(&self, word: &str, out: &mut Vec<Phoneme>);

    fn encode(&self, query: &NormalizedQuery) -> PhonemeSequence {
        let mut out = Vec::with_capacity(query.as_str().len());
        for word in query.words() {
            self.encode_word(word, &mut out);
        }
        PhonemeSequence(out)
    }
}

pub fn g2p(query: &NormalizedQuery, encoder: &impl PhoneticEncoder) -> PhonemeSequence {
    encoder.encode(query)
}

/// Unit-cost Levenshtein distance over any token slice.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn phonetic_distance(a: &PhonemeSequence, b: &PhonemeSequence) -> usize {
    edit_distance(&a.0, &b.0)
}

/// Edit distance divided by the longer length; 0 for two empty sequences.
pub fn normalized_phonetic_distance(a: &PhonemeSequence, b: &PhonemeSequence) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        0.0
    } else {
        phonetic_distance(a, b) as f64 / longest as f64
    }
}

pub fn query_phonetic_distance(
    a: &NormalizedQuery,
    b: &NormalizedQuery,
    encoder: &impl PhoneticEncoder,
) -> usize {
    if a == b {
        return 0;
    }
    phonetic_distance(&encoder.encode(a), &encoder.encode(b))
}
