//! Exact decimal thresholds in `[0, 1]`.
//!
//! `0.2` is stored as `2/10`, so `count / total > 0.2` is decided with integer
//! arithmetic and never depends on binary floating-point rounding.

use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const MAX_DECIMALS: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fraction {
    num: u64,
    den: u64,
}

impl Fraction {
    pub const ZERO: Fraction = Fraction { num: 0, den: 1 };
    pub const ONE: Fraction = Fraction { num: 1, den: 1 };

    pub fn numerator(self) -> u64 {
        self.num
    }

    pub fn denominator(self) -> u64 {
        self.den
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `part / whole > self`, exactly. A zero `whole` never exceeds.
    pub fn is_exceeded_by(self, part: u64, whole: u64) -> bool {
        whole > 0 && u128::from(part) * u128::from(self.den) > u128::from(self.num) * u128::from(whole)
    }

    fn reduced(mut num: u64, mut den: u64) -> Fraction {
        while num % 10 == 0 && den % 10 == 0 && den > 1 {
            num /= 10;
            den /= 10;
        }
        Fraction { num, den }
    }
}

impl FromStr for Fraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("{s:?} is not a decimal in [0, 1]"));
        let (int, frac) = s.trim().split_once('.').unwrap_or((s.trim(), ""));
        if (int.is_empty() && frac.is_empty())
            || !int.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
            || frac.len() > MAX_DECIMALS as usize
        {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let num = int
            .checked_mul(den)
            .and_then(|n| n.checked_add(frac))
            .ok_or_else(bad)?;
        if num > den {
            return Err(bad());
        }
        Ok(Fraction::reduced(num, den))
    }
}

impl TryFrom<f64> for Fraction {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        if !v.is_finite() {
            return Err(Error::Config(format!("{v} is not a decimal in [0, 1]")));
        }
        // Shortest round-trip decimal, e.g. 0.2 rather than 0.2000000000000000111.
        format!("{v}").parse()
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let int = self.num / self.den;
        let rem = self.num % self.den;
        if rem == 0 {
            return write!(f, "{int}");
        }
        let width = self.den.ilog10() as usize;
        let digits = format!("{rem:0width$}");
        write!(f, "{int}.{}", digits.trim_end_matches('0'))
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Float(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Float(v) => Fraction::try_from(v),
            Raw::Text(s) => s.parse(),
        }
        .map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> Fraction {
        s.parse().unwrap()
    }

    #[test]
    fn parses_and_displays() {
        for (input, shown) in [("0.2", "0.2"), ("0.50", "0.5"), ("1", "1"), ("0", "0"), (".05", "0.05"), ("1.0", "1")] {
            assert_eq!(f(input).to_string(), shown);
        }
        for bad in ["", ".", "1.5", "-0.1", "0.2x", "2"] {
            assert!(bad.parse::<Fraction>().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn strict_comparison_is_exact() {
        let beta = f("0.2");
        assert!(!beta.is_exceeded_by(2, 10));
        assert!(beta.is_exceeded_by(3, 10));
        assert!(!beta.is_exceeded_by(1, 10));
        assert!(!beta.is_exceeded_by(0, 0));
        assert!(!Fraction::ONE.is_exceeded_by(10, 10));
        assert!(Fraction::ZERO.is_exceeded_by(1, 10));
    }

    #[test]
    fn from_float() {
        assert_eq!(Fraction::try_from(0.2).unwrap(), f("0.2"));
        assert!(Fraction::try_from(0.1 + 0.2).is_err());
        assert!(Fraction::try_from(f64::NAN).is_err());
    }
}
