use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ExponentError;

/// Exact rational number used by every threshold computation.
pub type Rational = BigRational;

/// Shorthand constructor `num/den`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `2^-k` as an exact rational.
pub fn dyadic(k: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << k as usize)
}

/// Formats as `num/den`, always with an explicit denominator.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        // Huge numerator/denominator: shift both down before dividing.
        _ => {
            let bits = r.denom().bits().max(r.numer().bits()).saturating_sub(900);
            let n = (r.numer() >> bits as usize).to_f64().unwrap_or(f64::NAN);
            let d = (r.denom() >> bits as usize).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// Parses `"num/den"`, an integer, or a finite decimal such as `"0.125"`
/// into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, ExponentError> {
    let s = text.trim();
    let bad = || ExponentError::Parse(text.to_string());
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| bad())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if !frac.chars().all(|c| c.is_ascii_digit())
            || !whole_digits.chars().all(|c| c.is_ascii_digit())
            || (whole_digits.is_empty() && frac.is_empty())
        {
            return Err(bad());
        }
        let digits = format!("{whole_digits}{frac}");
        let mut num = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
        if negative {
            num = -num;
        }
        let den = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(Rational::new(num, den));
    }
    BigInt::from_str(s).map(Rational::from_integer).map_err(|_| bad())
}

/// A Lebesgue/Strichartz exponent: a finite rational or `∞`, with the
/// convention `1/∞ = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite(Rational),
    Infinite,
}

impl Exponent {
    pub fn finite(r: Rational) -> Self {
        Exponent::Finite(r)
    }

    pub fn from_int(n: i64) -> Self {
        Exponent::Finite(int(n))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    pub fn as_finite(&self) -> Option<&Rational> {
        match self {
            Exponent::Finite(r) => Some(r),
            Exponent::Infinite => None,
        }
    }

    /// `1/self`, with `1/∞ = 0`. Panics on a zero exponent, which no
    /// constructor in this crate produces.
    pub fn reciprocal(&self) -> Rational {
        match self {
            Exponent::Finite(r) => r.recip(),
            Exponent::Infinite => Rational::zero(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Exponent::Finite(r) => rational_to_f64(r),
            Exponent::Infinite => f64::INFINITY,
        }
    }

    /// Builds an exponent from `1/self`; a zero reciprocal maps to `∞`.
    pub fn from_reciprocal(recip: Rational) -> Option<Self> {
        if recip.is_zero() {
            Some(Exponent::Infinite)
        } else if recip.is_positive() {
            Some(Exponent::Finite(recip.recip()))
        } else {
            None
        }
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Exponent::Infinite, Exponent::Infinite) => Ordering::Equal,
            (Exponent::Infinite, _) => Ordering::Greater,
            (_, Exponent::Infinite) => Ordering::Less,
            (Exponent::Finite(a), Exponent::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(r) => f.write_str(&format_rational(r)),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = ExponentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "Inf" | "infinity" | "∞" => Ok(Exponent::Infinite),
            other => parse_rational(other).map(Exponent::Finite),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = RationalInput::deserialize(deserializer)?;
        match value {
            RationalInput::Int(i) => Ok(Exponent::from_int(i)),
            RationalInput::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Serde adapter accepting either a JSON integer or a rational string.
#[derive(Deserialize)]
#[serde(untagged)]
pub(crate) enum RationalInput {
    Int(i64),
    Text(String),
}

/// Serde helpers for `Rational` fields serialized as `"num/den"` strings.
pub mod rational_serde {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Rational, D::Error> {
        match RationalInput::deserialize(deserializer)? {
            RationalInput::Int(i) => Ok(int(i)),
            RationalInput::Text(s) => parse_rational(&s).map_err(serde::de::Error::custom),
        }
    }
}

/// Sign of the nonlinearity: `+1` focusing, `-1` defocusing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn from_int(v: i64) -> Option<Self> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_i64(if *self == Sign::Plus { 1 } else { -1 })
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = i64::deserialize(deserializer)?;
        Sign::from_int(v).ok_or_else(|| serde::de::Error::custom(format!("mu must be +1 or -1, got {v}")))
    }
}

/// The `(d, b, α, μ)` tuple every threshold and lemma is conditioned on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub d: u32,
    #[serde(with = "rational_serde")]
    pub b: Rational,
    #[serde(with = "rational_serde")]
    pub alpha: Rational,
    pub mu: Sign,
}

impl ProblemParams {
    pub fn new(d: u32, b: Rational, alpha: Rational, mu: Sign) -> Result<Self, ExponentError> {
        let params = ProblemParams { d, b, alpha, mu };
        params.validate()?;
        Ok(params)
    }

    /// Defocusing parameters, the common case for the decay and scattering
    /// machinery.
    pub fn defocusing(d: u32, b: Rational, alpha: Rational) -> Result<Self, ExponentError> {
        Self::new(d, b, alpha, Sign::Minus)
    }

    pub fn validate(&self) -> Result<(), ExponentError> {
        if !(1..=6).contains(&self.d) {
            return Err(ExponentError::InvalidParams(format!("dimension d = {} outside 1..=6", self.d)));
        }
        let b_max = int(self.d.min(2) as i64);
        if !self.b.is_positive() || self.b >= b_max {
            return Err(ExponentError::InvalidParams(format!(
                "b = {} violates 0 < b < min(2, d) = {}",
                format_rational(&self.b),
                b_max
            )));
        }
        if !self.alpha.is_positive() {
            return Err(ExponentError::InvalidParams(format!(
                "alpha = {} must be positive",
                format_rational(&self.alpha)
            )));
        }
        Ok(())
    }

    pub fn d_rational(&self) -> Rational {
        int(self.d as i64)
    }

    pub fn b_f64(&self) -> f64 {
        rational_to_f64(&self.b)
    }

    pub fn alpha_f64(&self) -> f64 {
        rational_to_f64(&self.alpha)
    }
}
