//! Exact extended-real exponents.
//!
//! Every hypothesis in the regularity criteria is a rational (in)equality
//! between Lebesgue exponents and weights, so exponents are kept as exact
//! rationals together with a single `INF` symbol. `1/INF == 0` exactly.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact rational used for weights and derived index quantities.
pub type Rational = Ratio<i128>;

/// Builds `num/den` as a [`Rational`].
pub fn rat(num: i128, den: i128) -> Rational {
    Rational::new(num, den)
}

/// Builds an integer [`Rational`].
pub fn int(v: i128) -> Rational {
    Rational::from_integer(v)
}

/// Parses `"a/b"`, `"-3"`, or a finite decimal such as `"0.25"` exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || Error::Parse(format!("malformed rational '{s}'"));
    if let Some((a, b)) = t.split_once('/') {
        let a: i128 = a.trim().parse().map_err(|_| bad())?;
        let b: i128 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(Error::Parse(format!("zero denominator in '{s}'")));
        }
        return Ok(Rational::new(a, b));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) || frac.len() > 30 {
            return Err(bad());
        }
        let neg = whole.starts_with('-');
        let w: i128 = if whole.is_empty() || whole == "-" || whole == "+" {
            0
        } else {
            whole.parse().map_err(|_| bad())?
        };
        let den = 10i128.pow(frac.len() as u32);
        let f: i128 = frac.parse().map_err(|_| bad())?;
        let mag = Rational::new(w.abs() * den + f, den);
        return Ok(if neg { -mag } else { mag });
    }
    t.parse::<i128>().map(Rational::from_integer).map_err(|_| bad())
}

/// Formats a rational as `a` or `a/b`.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Extended rational: a finite rational or `+INF`.
///
/// Used for derived thresholds such as the minimal angular exponents, which
/// may fall below 1 or be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExtRat {
    Finite(Rational),
    Inf,
}

impl ExtRat {
    pub fn finite(r: Rational) -> Self {
        ExtRat::Finite(r)
    }

    pub fn is_inf(&self) -> bool {
        matches!(self, ExtRat::Inf)
    }

    pub fn as_finite(&self) -> Option<Rational> {
        match self {
            ExtRat::Finite(r) => Some(*r),
            ExtRat::Inf => None,
        }
    }

    /// `1/x` for a positive value; `1/INF = 0` and `1/0 = INF`.
    pub fn recip(&self) -> ExtRat {
        match self {
            ExtRat::Inf => ExtRat::Finite(Rational::zero()),
            ExtRat::Finite(r) if r.is_zero() => ExtRat::Inf,
            ExtRat::Finite(r) => ExtRat::Finite(r.recip()),
        }
    }

    /// Multiplies by a non-negative rational (`INF * 0` is treated as 0).
    pub fn scale(&self, k: Rational) -> ExtRat {
        match self {
            ExtRat::Inf if k.is_zero() => ExtRat::Finite(Rational::zero()),
            ExtRat::Inf => ExtRat::Inf,
            ExtRat::Finite(r) => ExtRat::Finite(r * k),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtRat::Inf => f64::INFINITY,
            ExtRat::Finite(r) => *r.numer() as f64 / *r.denom() as f64,
        }
    }
}

impl PartialOrd for ExtRat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtRat::Inf, ExtRat::Inf) => Ordering::Equal,
            (ExtRat::Inf, _) => Ordering::Greater,
            (_, ExtRat::Inf) => Ordering::Less,
            (ExtRat::Finite(a), ExtRat::Finite(b)) => a.cmp(b),
        }
    }
}

impl From<Rational> for ExtRat {
    fn from(r: Rational) -> Self {
        ExtRat::Finite(r)
    }
}

impl From<Exponent> for ExtRat {
    fn from(e: Exponent) -> Self {
        e.0
    }
}

impl fmt::Display for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRat::Inf => write!(f, "inf"),
            ExtRat::Finite(r) => write!(f, "{}", format_rational(r)),
        }
    }
}

impl FromStr for ExtRat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" => Ok(ExtRat::Inf),
            _ => parse_rational(s).map(ExtRat::Finite),
        }
    }
}

impl Serialize for ExtRat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtRat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        value_to_string(&v)
            .and_then(|s| s.parse::<ExtRat>())
            .map_err(serde::de::Error::custom)
    }
}

/// A Lebesgue exponent in `[1, +INF]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Exponent(ExtRat);

impl Exponent {
    pub const INF: Exponent = Exponent(ExtRat::Inf);

    pub fn new(value: ExtRat) -> Result<Self> {
        match value {
            ExtRat::Finite(r) if r < Rational::one() => Err(Error::InvalidExponent(format!(
                "exponent {} is below 1",
                format_rational(&r)
            ))),
            v => Ok(Exponent(v)),
        }
    }

    /// Finite exponent `num/den`; panics if the value is below 1.
    pub fn frac(num: i128, den: i128) -> Self {
        Exponent::new(ExtRat::Finite(rat(num, den))).expect("exponent must be >= 1")
    }

    /// Integer exponent; panics if `v < 1`.
    pub fn int(v: i128) -> Self {
        Exponent::frac(v, 1)
    }

    pub fn value(&self) -> ExtRat {
        self.0
    }

    pub fn is_inf(&self) -> bool {
        self.0.is_inf()
    }

    pub fn as_finite(&self) -> Option<Rational> {
        self.0.as_finite()
    }

    /// Exact reciprocal; `recip(INF) == 0`.
    pub fn recip(&self) -> Rational {
        match self.0 {
            ExtRat::Inf => Rational::zero(),
            ExtRat::Finite(r) => r.recip(),
        }
    }

    /// Reciprocal of the Hölder conjugate, `1/p' = 1 - 1/p`.
    pub fn conjugate_recip(&self) -> Rational {
        Rational::one() - self.recip()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Exponent::new(s.parse()?)
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = ExtRat::deserialize(d)?;
        Exponent::new(v).map_err(serde::de::Error::custom)
    }
}

fn value_to_string(v: &serde_json::Value) -> Result<String> {
    match v {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(Error::Parse(format!("expected a number or string, got {other}"))),
    }
}

/// Serde adapter for [`Rational`] fields, written as `"a/b"` strings.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        value_to_string(&v)
            .and_then(|s| parse_rational(&s))
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("-2/3").unwrap(), rat(-2, 3));
        assert_eq!(parse_rational("4").unwrap(), int(4));
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert_eq!(parse_rational("-0.5").unwrap(), rat(-1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn inf_parses_and_reciprocal_is_zero() {
        let e: Exponent = "inf".parse().unwrap();
        assert!(e.is_inf());
        assert_eq!(e.recip(), int(0));
        assert_eq!("INF".parse::<Exponent>().unwrap(), Exponent::INF);
    }

    #[test]
    fn exponent_below_one_rejected() {
        assert!("1/2".parse::<Exponent>().is_err());
        assert!("1".parse::<Exponent>().is_ok());
    }

    #[test]
    fn ordering_puts_inf_last() {
        assert!(ExtRat::Inf > ExtRat::Finite(int(1_000_000)));
        assert!(Exponent::int(3) < Exponent::INF);
    }

    #[test]
    fn serde_roundtrip() {
        let e = Exponent::frac(8, 3);
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(s, "\"8/3\"");
        let back: Exponent = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
        let n: Exponent = serde_json::from_str("5").unwrap();
        assert_eq!(n, Exponent::int(5));
    }
}
