//! Numeric back ends for the planner: exact rationals and `f64`.
//!
//! Probabilities and rewards are always stored exactly. Value computations run
//! over any [`Scalar`], so the same recursion can be checked for exact equality
//! or evaluated quickly in floating point.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub trait Scalar: Clone + PartialOrd + Debug + Send + Sync + 'static {
    /// Whether arithmetic in this type is exact.
    const EXACT: bool;
    fn zero_value() -> Self;
    fn one_value() -> Self;
    fn from_rational(r: &Rational) -> Self;
    fn as_f64(&self) -> f64;
    fn plus(&self, other: &Self) -> Self;
    fn minus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;
    /// `d`-th root, when representable in this scalar type.
    fn root(&self, d: u32) -> Option<Self>;
    /// Deterministic text form for reports.
    fn render(&self) -> String;

    fn powi(&self, n: usize) -> Self {
        let mut acc = Self::one_value();
        for _ in 0..n {
            acc = acc.times(self);
        }
        acc
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn zero_value() -> Self {
        0.0
    }
    fn one_value() -> Self {
        1.0
    }
    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }
    fn as_f64(&self) -> f64 {
        *self
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn root(&self, d: u32) -> Option<Self> {
        match d {
            0 => None,
            1 => Some(*self),
            _ => Some(self.powf(1.0 / d as f64)),
        }
    }
    fn render(&self) -> String {
        format!("{self}")
    }
    fn powi(&self, n: usize) -> Self {
        f64::powi(*self, n as i32)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;
    fn zero_value() -> Self {
        Zero::zero()
    }
    fn one_value() -> Self {
        One::one()
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn as_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn root(&self, d: u32) -> Option<Self> {
        exact_root(self, d)
    }
    fn render(&self) -> String {
        format_rational(self)
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    if let Some(x) = r.to_f64() {
        if x.is_finite() {
            return x;
        }
    }
    // numerator and denominator both overflow f64; scale them down together
    let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
    let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
    let dd = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
    n / dd
}

/// Exact `d`-th root of a non-negative rational, if it is a perfect power.
pub fn exact_root(r: &Rational, d: u32) -> Option<Rational> {
    if d == 0 || r.is_negative() {
        return None;
    }
    let n = r.numer().nth_root(d);
    let q = r.denom().nth_root(d);
    if num_traits::pow(n.clone(), d as usize) == *r.numer()
        && num_traits::pow(q.clone(), d as usize) == *r.denom()
    {
        Some(Rational::new(n, q))
    } else {
        None
    }
}

pub fn rational(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, integers and decimals (`"0.125"`, `"-2.5e-3"`) exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a number: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let joined = format!("{whole}{frac}");
    let mut value = Rational::from_integer(joined.parse::<BigInt>().map_err(|_| bad())?);
    let scale = exponent - frac.len() as i32;
    let ten = int(10);
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Ok(if negative { -value } else { value })
}

/// Converts a float through its shortest round-trip decimal, so `0.1` becomes `1/10`.
pub fn rational_from_f64(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::Parse(format!("non-finite number {x}")));
    }
    parse_rational(&format!("{x}"))
}

/// `"p/q"`, or `"p"` for integers.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn floor_to_i64(r: &Rational) -> i64 {
    r.floor().to_integer().to_i64().unwrap_or(i64::MAX)
}
