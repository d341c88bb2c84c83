//! Exact rational helpers shared by every module.
//!
//! All monetary and score quantities are [`Rational`]s. Text forms are
//! `"p/q"` in lowest terms, or a bare integer when the denominator is one.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational {input:?}: {reason}")]
pub struct RationalParseError {
    pub input: String,
    pub reason: &'static str,
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn frac(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn from_u64(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, `"p"` or a plain decimal such as `"0.25"`.
pub fn parse_rational(text: &str) -> Result<Rational, RationalParseError> {
    let s = text.trim();
    let err = |reason| RationalParseError {
        input: text.to_string(),
        reason,
    };
    if s.is_empty() {
        return Err(err("empty"));
    }
    if let Some((p, q)) = s.split_once('/') {
        let num: BigInt = p.trim().parse().map_err(|_| err("bad numerator"))?;
        let den: BigInt = q.trim().parse().map_err(|_| err("bad denominator"))?;
        if den.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((whole, fraction)) = s.split_once('.') {
        if fraction.is_empty() || !fraction.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err("bad decimal"));
        }
        let negative = whole.starts_with('-');
        let whole: BigInt = match whole.trim_start_matches(['-', '+']) {
            "" => BigInt::zero(),
            w => w.parse().map_err(|_| err("bad integer part"))?,
        };
        let scale = num_traits::pow(BigInt::from(10u32), fraction.len());
        let frac_part: BigInt = fraction.parse().map_err(|_| err("bad decimal"))?;
        let magnitude = Rational::new(whole * &scale + frac_part, scale);
        return Ok(if negative { -magnitude } else { magnitude });
    }
    let n: BigInt = s.parse().map_err(|_| err("not a number"))?;
    Ok(Rational::from_integer(n))
}

/// Lowest-terms text form used in JSON output.
pub fn to_text(r: &Rational) -> String {
    r.to_string()
}

/// Round-half-up (away from zero on ties) decimal rendering at `places`.
pub fn to_decimal(r: &Rational, places: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10u32), places);
    let scaled = r.abs() * Rational::from_integer(scale.clone());
    let (q, rem) = scaled.numer().div_rem(scaled.denom());
    let rounded = if rem.clone() * BigInt::from(2) >= *scaled.denom() {
        q + BigInt::one()
    } else {
        q
    };
    let (int_part, frac_part) = rounded.div_rem(&scale);
    let sign = if r.is_negative() && !rounded.is_zero() {
        "-"
    } else {
        ""
    };
    if places == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{:0>width$}", frac_part, width = places)
    }
}

pub fn sum<'a, I: IntoIterator<Item = &'a Rational>>(items: I) -> Rational {
    items.into_iter().fold(Rational::zero(), |acc, x| acc + x)
}

/// Least common multiple of the denominators, always positive.
pub fn common_denominator<'a, I: IntoIterator<Item = &'a Rational>>(items: I) -> BigInt {
    items
        .into_iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

/// Display adapter printing a slice as `(a, b, c)`.
pub struct Tuple<'a>(pub &'a [Rational]);

impl fmt::Display for Tuple<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, r) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, ")")
    }
}

/// Serde adapter: rationals as `"p/q"` strings (integers also accepted on input).
pub mod serde_text {
    use super::{parse_rational, Rational};
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        Int(i64),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Text(t) => parse_rational(&t).map_err(de::Error::custom),
            Raw::Int(n) => Ok(super::int(n)),
        }
    }
}

/// Serde adapter for `Vec<Rational>`.
pub mod serde_text_vec {
    use super::Rational;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&r.to_string())?;
        }
        seq.end()
    }

    #[derive(Deserialize)]
    struct Wrapped(#[serde(with = "super::serde_text")] Rational);

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let raw: Vec<Wrapped> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(|w| w.0).collect())
    }
}
