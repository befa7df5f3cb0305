//! Exact rational numbers, the `∞`-extended value type and threshold bounds.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Arbitrary-precision rational, always in lowest terms with a positive denominator.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("malformed rational literal {0:?} (expected an integer or num/den)")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn parse_int(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Parses `"n"` or `"n/d"` (optional leading minus). Decimals are rejected:
/// thresholds and probabilities travel as exact fractions only.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let malformed = || ParseRationalError::Malformed(text.to_string());
    match s.split_once('/') {
        None => parse_int(s)
            .map(Rational::from_integer)
            .ok_or_else(malformed),
        Some((n, d)) => {
            let n = parse_int(n.trim()).ok_or_else(malformed)?;
            let d = parse_int(d.trim()).ok_or_else(malformed)?;
            if d.is_zero() {
                return Err(ParseRationalError::ZeroDenominator(text.to_string()));
            }
            Ok(Rational::new(n, d))
        }
    }
}

/// Parses a finite decimal such as `"0.25"` or `"-3."` exactly.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let s = text.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole
        .bytes()
        .chain(frac.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{whole}{frac}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let q = Rational::new(numer, denom);
    Some(if neg { -q } else { q })
}

/// Canonical text form: `"n"` for integers, `"n/d"` otherwise.
pub fn fmt_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// A rational or the distinguished value `∞`, which exceeds every rational.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Finite(Rational),
    Infinite,
}

impl Value {
    pub fn zero() -> Self {
        Value::Finite(Rational::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Value::Finite(_))
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Value::Finite(q) => Some(q),
            Value::Infinite => None,
        }
    }
}

impl From<Rational> for Value {
    fn from(q: Rational) -> Self {
        Value::Finite(q)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Finite(q) => f.write_str(&fmt_rational(q)),
            Value::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Value {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim() == "inf" {
            Ok(Value::Infinite)
        } else {
            parse_rational(s).map(Value::Finite)
        }
    }
}

/// A reward threshold `≤ τ`, or `< τ` when strict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Threshold {
    pub tau: Rational,
    pub strict: bool,
}

impl Threshold {
    pub fn at_most(tau: Rational) -> Self {
        Threshold { tau, strict: false }
    }

    pub fn below(tau: Rational) -> Self {
        Threshold { tau, strict: true }
    }

    pub fn admits(&self, v: &Value) -> bool {
        match v {
            Value::Infinite => false,
            Value::Finite(q) if self.strict => q < &self.tau,
            Value::Finite(q) => q <= &self.tau,
        }
    }

    pub fn is_negative(&self) -> bool {
        self.tau.is_negative()
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = if self.strict { "<" } else { "<=" };
        write!(f, "{op} {}", fmt_rational(&self.tau))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rational("1/2").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("6/4").unwrap(), ratio(3, 2));
        assert_eq!(parse_rational("-3").unwrap(), int(-3));
        assert_eq!(parse_rational(" 13248/575 ").unwrap(), ratio(13248, 575));
    }

    #[test]
    fn rejects_malformed_literals() {
        for bad in ["1.5x", "1.5", "", "a/b", "1/", "/2", "1/-", "--1"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
        assert_eq!(
            parse_rational("1/0"),
            Err(ParseRationalError::ZeroDenominator("1/0".into()))
        );
    }

    #[test]
    fn decimals_convert_exactly() {
        assert_eq!(parse_decimal("0.25"), Some(ratio(1, 4)));
        assert_eq!(parse_decimal("1.0"), Some(int(1)));
        assert_eq!(parse_decimal("-2.5"), Some(ratio(-5, 2)));
        assert_eq!(parse_decimal("7"), Some(int(7)));
        assert_eq!(parse_decimal("."), None);
        assert_eq!(parse_decimal("1e3"), None);
    }

    #[test]
    fn canonical_format() {
        assert_eq!(fmt_rational(&ratio(2, 4)), "1/2");
        assert_eq!(fmt_rational(&int(1)), "1");
        assert_eq!(fmt_rational(&ratio(-3, 4)), "-3/4");
        assert_eq!(Value::Infinite.to_string(), "inf");
    }

    #[test]
    fn infinity_dominates() {
        assert!(Value::Infinite > Value::Finite(int(1_000_000)));
        assert!(Value::Finite(ratio(1, 2)) < Value::Finite(int(1)));
        assert_eq!("inf".parse::<Value>().unwrap(), Value::Infinite);
    }

    #[test]
    fn thresholds() {
        let le = Threshold::at_most(ratio(3, 2));
        let lt = Threshold::below(ratio(3, 2));
        let v = Value::Finite(ratio(3, 2));
        assert!(le.admits(&v));
        assert!(!lt.admits(&v));
        assert!(!le.admits(&Value::Infinite));
    }
}
