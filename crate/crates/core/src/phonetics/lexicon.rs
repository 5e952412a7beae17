use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::OnceLock;

use super::{rules, Phoneme, PhonemeSequence, PhoneticEncoder};
use crate::error::{Error, Result};
use crate::query::normalize;

static BUNDLED_SOURCE: &str = include_str!("../../data/lexicon.tsv");
static BUNDLED: OnceLock<PronouncingLexicon> = OnceLock::new();

const DIGIT_WORDS: [&str; 10] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
];

/// Word to pronunciation map with a rule-based fallback for unknown words.
///
/// File format: `word \t PH PH PH ...`, one word per line, lines starting
/// with `#` are comments.
#[derive(Debug, Clone, Default)]
pub struct PronouncingLexicon {
    entries: HashMap<String, PhonemeSequence>,
}

impl PronouncingLexicon {
    /// The CMU-derived lexicon compiled into the binary (about 126k words).
    pub fn bundled() -> &'static PronouncingLexicon {
        BUNDLED.get_or_init(|| {
            Self::from_reader(BUNDLED_SOURCE.as_bytes()).expect("bundled lexicon is well formed")
        })
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(BufReader::new(File::open(path)?))
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self> {
        let mut entries = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            let bad = |reason: String| Error::LexiconParse {
                line: line_no,
                reason,
            };
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, phones) = line
                .split_once('\t')
                .ok_or_else(|| bad("missing tab separator".into()))?;
            let key = normalize(word).map_err(|_| bad("empty word".into()))?;
            if key.as_str().contains(' ') {
                return Err(bad(format!("{word:?} is not a single word")));
            }
            let pron = phones
                .parse::<PhonemeSequence>()
                .map_err(|e| bad(e.to_string()))?;
            if pron.is_empty() {
                return Err(bad(format!("no phonemes for {word:?}")));
            }
            if entries.insert(key.into_string(), pron).is_some() {
                return Err(bad(format!("duplicate entry for {word:?}")));
            }
        }
        Ok(PronouncingLexicon { entries })
    }

    /// Adds or replaces one entry. `word` is normalized first.
    pub fn insert(&mut self, word: &str, pron: PhonemeSequence) -> Result<()> {
        let key = normalize(word)?;
        if key.as_str().contains(' ') {
            return Err(Error::Config(format!("{word:?} is not a single word")));
        }
        self.entries.insert(key.into_string(), pron);
        Ok(())
    }

    pub fn get(&self, word: &str) -> Option<&PhonemeSequence> {
        self.entries.get(word)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &PhonemeSequence)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    fn push_digit(&self, digit: char, out: &mut Vec<Phoneme>) {
        let word = DIGIT_WORDS[digit.to_digit(10).unwrap_or(0) as usize];
        match self.get(word) {
            Some(p) => out.extend_from_slice(p.tokens()),
            None => rules::letters_to_phonemes(word, out),
        }
    }
}

impl PhoneticEncoder for PronouncingLexicon {
    fn encode_word(&self, word: &str, out: &mut Vec<Phoneme>) {
        if let Some(p) = self.get(word) {
            out.extend_from_slice(p.tokens());
            return;
        }
        let trimmed = word.trim_matches(|c: char| !c.is_alphanumeric());
        if trimmed != word {
            if let Some(p) = self.get(trimmed) {
                out.extend_from_slice(p.tokens());
                return;
            }
        }
        // Split on punctuation and digit/letter boundaries, then look up or
        // spell out each piece.
        let mut piece = String::new();
        let flush = |piece: &mut String, out: &mut Vec<Phoneme>| {
            if piece.is_empty() {
                return;
            }
            match self.get(piece) {
                Some(p) => out.extend_from_slice(p.tokens()),
                None => rules::letters_to_phonemes(piece, out),
            }
            piece.clear();
        };
        for c in trimmed.chars() {
            if c.is_ascii_digit() {
                flush(&mut piece, out);
                self.push_digit(c, out);
            } else if c.is_alphabetic() || c == '\'' {
                piece.push(c);
            } else {
                flush(&mut piece, out);
            }
        }
        flush(&mut piece, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phonetics::g2p;

    fn q(s: &str) -> crate::query::NormalizedQuery {
        normalize(s).unwrap()
    }

    #[test]
    fn bundled_size() {
        let lex = PronouncingLexicon::bundled();
        assert!(lex.len() > 120_000, "{}", lex.len());
    }

    #[test]
    fn single_word_equals_entry() {
        let lex = PronouncingLexicon::bundled();
        for word in ["music", "house", "tours", "chair", "zebra"] {
            assert_eq!(&g2p(&q(word), lex), lex.get(word).unwrap());
        }
    }

    #[test]
    fn parses_file_format() {
        let src = "# comment\nrocks\tR AA1 K S\n\nand\tAE N D\n";
        let lex = PronouncingLexicon::from_reader(src.as_bytes()).unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(g2p(&q("rocks and"), &lex).to_string(), "R AA K S AE N D");
    }

    #[test]
    fn rejects_bad_lines() {
        for src in ["rocks R AA K S\n", "rock sand\tR AA K\n", "x\tQQ\n", "x\tK\nx\tS\n", "x\t\n"] {
            assert!(PronouncingLexicon::from_reader(src.as_bytes()).is_err(), "{src:?}");
        }
    }

    #[test]
    fn punctuation_and_digits() {
        let lex = PronouncingLexicon::bundled();
        assert_eq!(g2p(&q("songs!"), lex), g2p(&q("songs"), lex));
        assert_eq!(g2p(&q("ac/dc"), lex), g2p(&q("ac dc"), lex));
        let six = lex.get("six").unwrap().tokens();
        assert!(g2p(&q("6ix9ine"), lex).tokens().starts_with(six));
    }

    #[test]
    fn out_of_vocabulary_is_deterministic() {
        let lex = PronouncingLexicon::bundled();
        assert!(!lex.contains("xxtenations"));
        let a = g2p(&q("xxtenations"), lex);
        assert!(!a.is_empty());
        assert_eq!(a, g2p(&q("xxtenations"), lex));
    }
}
