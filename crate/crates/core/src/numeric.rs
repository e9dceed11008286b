//! Dual-mode arithmetic.
//!
//! Every computation in the crate is generic over [`Scalar`], which is
//! implemented for exact rationals ([`Rational`]) and for `f64`. Exact mode
//! makes equalities such as "the distance is the same at every level"
//! checkable without a tolerance; float mode compares within [`FLOAT_TOL`].

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Absolute tolerance used by float mode for equality and normalization checks.
pub const FLOAT_TOL: f64 = 1e-9;

/// Grid on which float masses are quantized before canonical sorting.
pub const QUANTIZE_GRID: f64 = 1e-12;

pub trait Scalar:
    Clone + Debug + Display + PartialEq + PartialOrd + Num + Signed + Send + Sync + 'static
{
    /// Whether arithmetic is exact.
    const EXACT: bool;

    fn ratio(numer: i64, denom: i64) -> Self;

    fn from_int(n: i64) -> Self {
        Self::ratio(n, 1)
    }

    fn to_f64(&self) -> f64;

    /// Parses integers, decimals (`0.75`, `1e-3`) and fractions (`3/4`).
    /// Decimals are converted exactly in rational mode.
    fn parse_number(s: &str) -> Result<Self>;

    /// Equality in exact mode, closeness within [`FLOAT_TOL`] otherwise.
    fn near(&self, other: &Self) -> bool;

    /// Stable textual form: `a/b` or `a` for rationals, shortest
    /// round-trip decimal for floats.
    fn repr(&self) -> String;

    /// Key used to order and hash masses in canonical forms. Floats are
    /// snapped to [`QUANTIZE_GRID`].
    fn canonical_key(&self) -> String;

    /// Strictly negative; in float mode by more than a tolerance relative to `scale`.
    fn is_neg_beyond(&self, scale: &Self) -> bool;

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn sum<'a, I: IntoIterator<Item = &'a Self>>(it: I) -> Self {
        it.into_iter().fold(Self::zero(), |acc, x| acc + x.clone())
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn ratio(numer: i64, denom: i64) -> Self {
        BigRational::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn parse_number(s: &str) -> Result<Self> {
        parse_rational(s.trim())
    }

    fn near(&self, other: &Self) -> bool {
        self == other
    }

    fn repr(&self) -> String {
        if self.denom().is_one() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn canonical_key(&self) -> String {
        self.repr()
    }

    fn is_neg_beyond(&self, _scale: &Self) -> bool {
        self.is_negative()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn parse_number(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.contains('/') {
            return parse_rational(s).map(|r| Scalar::to_f64(&r));
        }
        s.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::InvalidNumber(s.to_string()))
    }

    fn near(&self, other: &Self) -> bool {
        (self - other).abs() <= FLOAT_TOL
    }

    fn repr(&self) -> String {
        let mut s = format!("{}", self);
        if s == "-0" {
            s = "0".into();
        }
        s
    }

    fn canonical_key(&self) -> String {
        let snapped = (self / QUANTIZE_GRID).round() as i128;
        snapped.to_string()
    }

    fn is_neg_beyond(&self, scale: &Self) -> bool {
        *self < -1e-12 * (1.0 + scale.abs())
    }
}

fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::InvalidNumber(s.to_string());
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_decimal(n.trim()).ok_or_else(bad)?;
        let d = parse_decimal(d.trim()).ok_or_else(bad)?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(n / d);
    }
    parse_decimal(s).ok_or_else(bad)
}

/// Exact conversion of a decimal literal with optional exponent.
fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let all = format!("{}{}", int_part, frac_part);
    let numer = BigInt::from_str(if all.is_empty() { "0" } else { &all }).ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Some(r)
}

/// Reads a number from a JSON value: a JSON number or a string such as `"3/4"`.
pub fn from_json<S: Scalar>(v: &serde_json::Value) -> Result<S> {
    match v {
        serde_json::Value::Number(n) => S::parse_number(&n.to_string()),
        serde_json::Value::String(s) => S::parse_number(s),
        other => Err(Error::InvalidNumber(other.to_string())),
    }
}

/// Total variation of the signed difference of two vectors of equal length.
pub(crate) fn half_l1<S: Scalar>(a: &[S], b: &[S]) -> S {
    let total = a
        .iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + (x.clone() - y.clone()).abs());
    total / S::from_int(2)
}

/// Arithmetic mode chosen for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Float,
}

impl Mode {
    /// Exact rationals for small models, floats otherwise.
    pub fn auto(max_states: usize, horizon: usize) -> Mode {
        if max_states <= 64 && horizon <= 32 {
            Mode::Exact
        } else {
            Mode::Float
        }
    }
}
