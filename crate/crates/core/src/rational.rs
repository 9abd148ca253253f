//! Exact rational helpers shared by the measure code.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("malformed rational {0:?} (expected p/q or an integer)")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// 3^k for any integer k.
pub fn pow3(k: i64) -> Rational {
    let p = num_traits::pow(BigInt::from(3), k.unsigned_abs() as usize);
    if k >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

/// Parses `"p/q"` or `"p"`. Whitespace around the parts is ignored.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let malformed = || ParseRationalError::Malformed(s.to_string());
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let num: BigInt = num.parse().map_err(|_| malformed())?;
    let den: BigInt = den.parse().map_err(|_| malformed())?;
    if den.is_zero() {
        return Err(ParseRationalError::ZeroDenominator(s.to_string()));
    }
    Ok(Rational::new(num, den))
}

pub fn to_f64(q: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn in_unit_interval(q: &Rational) -> bool {
    !q.is_negative() && *q <= Rational::one()
}

/// Absolute difference, used to rank discrepancies in reports.
pub fn abs_diff(x: &Rational, y: &Rational) -> Rational {
    (x - y).abs()
}
