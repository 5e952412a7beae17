//! Letter-to-sound fallback for words missing from the lexicon.
//!
//! Greedy longest-match over a small grapheme table. Crude, but total and
//! deterministic, which is all the distance computation needs.

use super::Phoneme;

fn ph(symbol: &str) -> Phoneme {
    Phoneme::from_symbol(symbol).expect("rule table uses inventory symbols")
}

const VOWELS: &[u8] = b"aeiouy";

fn is_vowel(b: u8) -> bool {
    VOWELS.contains(&b)
}

// (grapheme, phonemes). Longer graphemes first within each starting letter.
const GRAPHEMES: &[(&str, &str)] = &[
    ("tch", "CH"),
    ("sch", "S K"),
    ("igh", "AY"),
    ("ough", "AO"),
    ("augh", "AO"),
    ("tion", "SH AH N"),
    ("sion", "ZH AH N"),
    ("ch", "CH"),
    ("sh", "SH"),
    ("th", "TH"),
    ("ph", "F"),
    ("ck", "K"),
    ("ng", "NG"),
    ("qu", "K W"),
    ("wh", "W"),
    ("ee", "IY"),
    ("ea", "IY"),
    ("oo", "UW"),
    ("ou", "AW"),
    ("ow", "OW"),
    ("oi", "OY"),
    ("oy", "OY"),
    ("ai", "EY"),
    ("ay", "EY"),
    ("au", "AO"),
    ("aw", "AO"),
    ("ie", "IY"),
    ("ei", "EY"),
    ("er", "ER"),
    ("ir", "ER"),
    ("ur", "ER"),
    ("ar", "AA R"),
    ("or", "AO R"),
];

/// Appends a pronunciation guess for `word` (lowercase) to `out`.
pub(super) fn letters_to_phonemes(word: &str, out: &mut Vec<Phoneme>) {
    let bytes: Vec<u8> = word
        .chars()
        .filter_map(|c| {
            let c = c.to_ascii_lowercase();
            c.is_ascii_lowercase().then_some(c as u8)
        })
        .collect();
    let n = bytes.len();
    let mut i = 0;

    // Initial silent letters.
    if n > 2 && (bytes.starts_with(b"kn") || bytes.starts_with(b"wr") || bytes.starts_with(b"gn")) {
        i = 1;
    }

    while i < n {
        let rest = &bytes[i..];

        // Silent final e after a consonant.
        if rest == b"e" && n > 2 && !is_vowel(bytes[i - 1]) {
            break;
        }
        // Doubled consonants sound once.
        if i > 0 && bytes[i] == bytes[i - 1] && !is_vowel(bytes[i]) {
            i += 1;
            continue;
        }

        if let Some((g, p)) = GRAPHEMES.iter().find(|(g, _)| rest.starts_with(g.as_bytes())) {
            out.extend(p.split(' ').map(ph));
            i += g.len();
            continue;
        }

        let next = rest.get(1).copied();
        let soft = matches!(next, Some(b'e' | b'i' | b'y'));
        let symbols: &[&str] = match bytes[i] {
            b'a' => &["AE"],
            b'e' => &["EH"],
            b'i' => &["IH"],
            b'o' => &["AA"],
            b'u' => &["AH"],
            b'y' if i == 0 => &["Y"],
            b'y' if i + 1 == n => &["IY"],
            b'y' => &["IH"],
            b'c' if soft => &["S"],
            b'c' => &["K"],
            b'g' if soft => &["JH"],
            b'g' if next == Some(b'h') => &[],
            b'g' => &["G"],
            b'x' if i == 0 => &["Z"],
            b'x' => &["K", "S"],
            b'j' => &["JH"],
            b'q' => &["K"],
            b'b' => &["B"],
            b'd' => &["D"],
            b'f' => &["F"],
            b'h' => &["HH"],
            b'k' => &["K"],
            b'l' => &["L"],
            b'm' => &["M"],
            b'n' => &["N"],
            b'p' => &["P"],
            b'r' => &["R"],
            b's' => &["S"],
            b't' => &["T"],
            b'v' => &["V"],
            b'w' => &["W"],
            b'z' => &["Z"],
            _ => &[],
        };
        out.extend(symbols.iter().map(|s| ph(s)));
        i += 1;
    }
}
