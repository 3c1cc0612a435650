//! Exact rational scalars and their textual forms.
//!
//! Everything in this crate is computed over [`Q`], an arbitrary-precision
//! rational. Inputs arrive as `"p/q"` strings, integers or finite decimals;
//! a decimal `d.dddd` with `k` fractional digits becomes a fraction with
//! denominator `10^k` (before reduction), never a binary float.

use num::bigint::BigInt;
use num::{BigRational, One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar.
pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

/// Parses `"p/q"`, `"-12"`, `"0.125"`, `"1e-3"` style input into an exact rational.
pub fn parse_rational(text: &str) -> Result<Q> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not an exact rational literal: {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| bad())?;
        let d: BigInt = den.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {text:?}")));
        }
        return Ok(Q::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: String = format!("{int_part}{frac_part}");
    let numer: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().map_err(|_| bad())? };
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Q::from_integer(numer * num::pow(ten, scale as usize))
    } else {
        Q::new(numer, num::pow(ten, (-scale) as usize))
    };
    Ok(if negative { -value } else { value })
}

/// Canonical text: integers as `"3"`, everything else as reduced `"p/q"`.
pub fn format_rational(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Lossy conversion for plotting and human-facing summaries only.
pub fn to_f64(x: &Q) -> f64 {
    use num::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn is_nonnegative(x: &Q) -> bool {
    !x.is_negative()
}

pub(crate) mod serde_q {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let raw = RawNumber::deserialize(d)?;
        raw.to_q().map_err(serde::de::Error::custom)
    }

    /// JSON number or string; numbers are read from their literal text so
    /// `0.1` stays `1/10`.
    #[derive(Deserialize)]
    #[serde(untagged)]
    pub enum RawNumber {
        Text(String),
        Number(serde_json::Number),
    }

    impl RawNumber {
        pub fn to_q(&self) -> Result<Q> {
            match self {
                RawNumber::Text(t) => parse_rational(t),
                RawNumber::Number(n) => parse_rational(&n.to_string()),
            }
        }
    }
}
