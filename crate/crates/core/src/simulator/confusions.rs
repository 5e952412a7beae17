//! Phrase-level confusion pairs for the synthetic ASR channel.
//!
//! File format: a `#max_distance=<n>` header, then `true_phrase \t corrupted`
//! lines. Order matters: the first distinct true phrase is the most popular
//! one in simulation.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::phonetics::{
    phonetic_distance, query_phonetic_distance, Phoneme, PhonemeSequence, PhoneticEncoder,
    PronouncingLexicon,
};
use crate::query::{normalize, NormalizedQuery};

static BUNDLED_SOURCE: &str = include_str!("../../data/confusions.tsv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionLexicon {
    max_distance: u32,
    entries: Vec<(NormalizedQuery, NormalizedQuery)>,
}

impl ConfusionLexicon {
    /// Checks structural consistency: no self pairs, no repeated pairs, each
    /// corrupted phrase maps to exactly one true phrase and is not itself a
    /// true phrase.
    pub fn new(max_distance: u32, entries: Vec<(NormalizedQuery, NormalizedQuery)>) -> Result<Self> {
        let truths: HashSet<&NormalizedQuery> = entries.iter().map(|(t, _)| t).collect();
        let mut seen: HashMap<&NormalizedQuery, &NormalizedQuery> = HashMap::new();
        for (t, c) in &entries {
            if t == c {
                return Err(Error::Config(format!("confusion pair maps {t:?} to itself")));
            }
            if truths.contains(c) {
                return Err(Error::Config(format!("corrupted phrase {c:?} is also a true phrase")));
            }
            if let Some(prev) = seen.insert(c, t) {
                let what = if prev == t { "repeated pair" } else { "ambiguous corrupted phrase" };
                return Err(Error::Config(format!("{what} {c:?}")));
            }
        }
        Ok(ConfusionLexicon {
            max_distance,
            entries,
        })
    }

    pub fn bundled() -> ConfusionLexicon {
        Self::parse(BUNDLED_SOURCE).expect("bundled confusion lexicon is well formed")
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(BufReader::new(File::open(path)?))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_reader(text.as_bytes())
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self> {
        let mut max_distance = None;
        let mut entries = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let n = idx + 1;
            let bad = |reason: &str| Error::ConfusionParse {
                line: n,
                reason: reason.to_owned(),
            };
            if let Some(v) = line.strip_prefix("#max_distance=") {
                max_distance = Some(v.trim().parse().map_err(|_| bad("bad max_distance"))?);
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let (t, c) = line.split_once('\t').ok_or_else(|| bad("missing tab separator"))?;
            if c.contains('\t') {
                return Err(bad("too many fields"));
            }
            let t = normalize(t).map_err(|_| bad("empty true phrase"))?;
            let c = normalize(c).map_err(|_| bad("empty corrupted phrase"))?;
            entries.push((t, c));
        }
        let max_distance = max_distance.ok_or_else(|| Error::ConfusionParse {
            line: 1,
            reason: "missing #max_distance header".into(),
        })?;
        Self::new(max_distance, entries)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = format!("#max_distance={}\n", self.max_distance);
        for (t, c) in &self.entries {
            let _ = writeln!(out, "{t}\t{c}");
        }
        out
    }

    pub fn max_distance(&self) -> u32 {
        self.max_distance
    }

    pub fn entries(&self) -> &[(NormalizedQuery, NormalizedQuery)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True phrases with their corruptions, in order of first appearance.
    pub fn grouped(&self) -> Vec<(NormalizedQuery, Vec<NormalizedQuery>)> {
        let mut index: HashMap<&NormalizedQuery, usize> = HashMap::new();
        let mut groups: Vec<(NormalizedQuery, Vec<NormalizedQuery>)> = Vec::new();
        for (t, c) in &self.entries {
            let i = *index.entry(t).or_insert_with(|| {
                groups.push((t.clone(), Vec::new()));
                groups.len() - 1
            });
            groups[i].1.push(c.clone());
        }
        groups
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlaggedPair {
    pub true_phrase: NormalizedQuery,
    pub corrupted: NormalizedQuery,
    pub distance: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionReport {
    pub checked: usize,
    pub bound: u32,
    pub flagged: Vec<FlaggedPair>,
}

impl ConfusionReport {
    pub fn is_valid(&self) -> bool {
        self.flagged.is_empty()
    }
}

/// Flags every pair whose phonetic distance exceeds `bound`.
pub fn validate_confusions(
    entries: &[(NormalizedQuery, NormalizedQuery)],
    encoder: &impl PhoneticEncoder,
    bound: u32,
) -> ConfusionReport {
    let flagged = entries
        .iter()
        .filter_map(|(t, c)| {
            let distance = query_phonetic_distance(t, c, encoder);
            (distance > bound as usize).then(|| FlaggedPair {
                true_phrase: t.clone(),
                corrupted: c.clone(),
                distance,
            })
        })
        .collect();
    ConfusionReport {
        checked: entries.len(),
        bound,
        flagged,
    }
}

/// Inputs for [`mine_confusions`].
#[derive(Debug, Clone)]
pub struct MiningSpec<'a> {
    /// Hand-picked `(true, corrupted)` phrase pairs placed first.
    pub seed_pairs: &'a [(&'a str, &'a str)],
    /// Words that get misheard.
    pub words: &'a [&'a str],
    /// Query frames with one `{}` slot.
    pub templates: &'a [&'a str],
    pub templates_per_word: usize,
    pub corruptions_per_word: usize,
    pub bound: u32,
}

static SEED_WORDS: &str = include_str!("../../data/seed_words.txt");

pub const SEED_PAIRS: &[(&str, &str)] = &[
    ("roxanne", "rocks and"),
    ("work out music", "look out music"),
    ("walk them down", "wacom down"),
    ("house tours", "how stores"),
];

pub const TEMPLATES: &[&str] = &[
    "play {}",
    "{} songs",
    "{} lyrics",
    "{} near me",
    "watch {} video",
    "{} tickets tonight",
    "who is {}",
    "{} on youtube",
    "listen to {}",
    "best {} of all time",
    "how to draw {}",
    "{} music video",
    "where is {} playing",
    "buy {} online",
    "pictures of {}",
    "{} live concert",
];

pub fn seed_words() -> Vec<&'static str> {
    SEED_WORDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

impl MiningSpec<'static> {
    pub fn bundled(words: &'static [&'static str]) -> Self {
        MiningSpec {
            seed_pairs: SEED_PAIRS,
            words,
            templates: TEMPLATES,
            templates_per_word: 2,
            corruptions_per_word: 2,
            bound: 2,
        }
    }
}

fn plain_word(w: &str) -> bool {
    (w.len() >= 2 || w == "a") && w.bytes().all(|b| b.is_ascii_lowercase())
}

/// Finds near-homophones of each word in the lexicon: single words and
/// two-word resegmentations within one phoneme edit (exact matches first),
/// then places the words into query templates.
pub fn mine_confusions(lexicon: &PronouncingLexicon, spec: &MiningSpec<'_>) -> Result<ConfusionLexicon> {
    let mut by_pron: HashMap<&[Phoneme], Vec<&str>> = HashMap::new();
    for (word, pron) in lexicon.iter() {
        if plain_word(word) {
            by_pron.entry(pron.tokens()).or_default().push(word);
        }
    }
    for words in by_pron.values_mut() {
        words.sort_unstable();
    }

    let mut entries: Vec<(NormalizedQuery, NormalizedQuery)> = Vec::new();
    let mut truths: HashSet<NormalizedQuery> = HashSet::new();
    let mut corrupted: HashSet<NormalizedQuery> = HashSet::new();

    let mut push = |entries: &mut Vec<_>, t: NormalizedQuery, c: NormalizedQuery| -> bool {
        if t == c || corrupted.contains(&c) || truths.contains(&c) || corrupted.contains(&t) {
            return false;
        }
        truths.insert(t.clone());
        corrupted.insert(c.clone());
        entries.push((t, c));
        true
    };

    for (t, c) in spec.seed_pairs {
        let (t, c) = (normalize(t)?, normalize(c)?);
        if query_phonetic_distance(&t, &c, lexicon) <= spec.bound as usize {
            push(&mut entries, t, c);
        }
    }

    for (i, word) in spec.words.iter().enumerate() {
        let Some(pron) = lexicon.get(word) else { continue };
        let variants = near_homophones(word, pron, &by_pron, spec.corruptions_per_word);
        if variants.is_empty() {
            continue;
        }
        for j in 0..spec.templates_per_word {
            let template = spec.templates[(i * 7 + j * 5) % spec.templates.len()];
            let t = normalize(&template.replace("{}", word))?;
            for v in &variants {
                let c = normalize(&template.replace("{}", v))?;
                if query_phonetic_distance(&t, &c, lexicon) <= spec.bound as usize {
                    push(&mut entries, t.clone(), c);
                }
            }
        }
    }
    ConfusionLexicon::new(spec.bound, entries)
}

/// Up to `limit` spellings that sound like `word`: distance 0 before 1,
/// single words before two-word splits, then alphabetical.
fn near_homophones(
    word: &str,
    pron: &PhonemeSequence,
    by_pron: &HashMap<&[Phoneme], Vec<&str>>,
    limit: usize,
) -> Vec<String> {
    let target = pron.tokens();
    let mut found: BTreeSet<(usize, usize, String)> = BTreeSet::new();

    let consider = |seq: &[Phoneme], found: &mut BTreeSet<_>| {
        for (parts, spellings) in split_spellings(seq, by_pron) {
            let d = phonetic_distance(pron, &PhonemeSequence::new(seq.to_vec()));
            for s in spellings {
                if s != word && !s.split(' ').any(|p| p == word) {
                    found.insert((d, parts, s));
                }
            }
        }
    };

    consider(target, &mut found);
    for variant in one_edit_variants(target) {
        consider(&variant, &mut found);
    }
    found.into_iter().take(limit).map(|(_, _, s)| s).collect()
}

/// Spellings of `seq` as one word or two adjacent words, tagged with the
/// number of words.
fn split_spellings(seq: &[Phoneme], by_pron: &HashMap<&[Phoneme], Vec<&str>>) -> Vec<(usize, Vec<String>)> {
    let mut out = Vec::new();
    if let Some(ws) = by_pron.get(seq) {
        out.push((1, ws.iter().take(3).map(|w| w.to_string()).collect()));
    }
    for k in 2..seq.len().saturating_sub(1) {
        if let (Some(left), Some(right)) = (by_pron.get(&seq[..k]), by_pron.get(&seq[k..])) {
            let spellings = left
                .iter()
                .take(2)
                .flat_map(|l| right.iter().take(2).map(move |r| format!("{l} {r}")))
                .collect();
            out.push((2, spellings));
        }
    }
    out
}

fn one_edit_variants(seq: &[Phoneme]) -> Vec<Vec<Phoneme>> {
    let alphabet: Vec<Phoneme> = (0..crate::phonetics::INVENTORY.len())
        .filter_map(Phoneme::from_index)
        .collect();
    let mut out = Vec::new();
    for i in 0..seq.len() {
        let mut v = seq.to_vec();
        v.remove(i);
        out.push(v);
        for &p in &alphabet {
            if p != seq[i] {
                let mut v = seq.to_vec();
                v[i] = p;
                out.push(v);
            }
        }
    }
    for i in 0..=seq.len() {
        for &p in &alphabet {
            let mut v = seq.to_vec();
            v.insert(i, p);
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> NormalizedQuery {
        normalize(s).unwrap()
    }

    #[test]
    fn validation_flags_far_pairs() {
        let lex = PronouncingLexicon::bundled();
        let ok = validate_confusions(&[(q("rocks and"), q("roxanne"))], lex, 2);
        assert!(ok.is_valid());
        let bad = validate_confusions(&[(q("gaming chair"), q("zebra"))], lex, 2);
        assert_eq!(bad.flagged.len(), 1);
        assert!(bad.flagged[0].distance > 2);
        assert!(validate_confusions(&[], lex, 2).is_valid());
    }

    #[test]
    fn parse_and_write() {
        let text = "#max_distance=2\nroxanne\trocks and\nroxanne\trocks an\nhouse tours\thow stores\n";
        let c = ConfusionLexicon::parse(text).unwrap();
        assert_eq!(c.max_distance(), 2);
        assert_eq!(c.len(), 3);
        assert_eq!(c.to_file_string(), text);
        let groups = c.grouped();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].1.len(), 2);
    }

    #[test]
    fn rejects_inconsistent_files() {
        for text in [
            "roxanne\trocks and\n",
            "#max_distance=2\nroxanne\troxanne\n",
            "#max_distance=2\nroxanne\trocks and\nrock sand\trocks and\n",
            "#max_distance=2\nroxanne\trocks and\nrocks and\tx\n",
            "#max_distance=2\nroxanne rocks and\n",
        ] {
            assert!(ConfusionLexicon::parse(text).is_err(), "{text:?}");
        }
    }

    #[test]
    fn bundled_pairs_are_within_bound() {
        let c = ConfusionLexicon::bundled();
        let report = validate_confusions(c.entries(), PronouncingLexicon::bundled(), c.max_distance());
        assert!(report.is_valid(), "{:?}", &report.flagged[..report.flagged.len().min(5)]);
        assert!(c.grouped().len() >= 400, "{}", c.grouped().len());
    }

    #[test]
    fn bundled_file_matches_miner() {
        let words = seed_words();
        let words: &'static [&'static str] = Box::leak(words.into_boxed_slice());
        let mined = mine_confusions(PronouncingLexicon::bundled(), &MiningSpec::bundled(words)).unwrap();
        assert_eq!(mined, ConfusionLexicon::bundled());
    }

    #[test]
    fn finds_resegmentations() {
        let lex = PronouncingLexicon::bundled();
        let mut by_pron: HashMap<&[Phoneme], Vec<&str>> = HashMap::new();
        for (w, p) in lex.iter() {
            if plain_word(w) {
                by_pron.entry(p.tokens()).or_default().push(w);
            }
        }
        for v in by_pron.values_mut() {
            v.sort_unstable();
        }
        let found = near_homophones("roxanne", lex.get("roxanne").unwrap(), &by_pron, 50);
        assert!(found.iter().any(|s| s.contains(' ')), "{found:?}");
    }
}
