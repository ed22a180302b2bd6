use std::cmp::Ordering;
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::TsirelsonError;

/// A reduced nonnegative fraction num/den, den ≥ 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FracRepr", into = "FracRepr")]
pub struct Frac {
    num: u64,
    den: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FracRepr {
    num: u64,
    den: u64,
}

impl TryFrom<FracRepr> for Frac {
    type Error = TsirelsonError;
    fn try_from(r: FracRepr) -> Result<Self, Self::Error> {
        Frac::new(r.num, r.den)
    }
}

impl From<Frac> for FracRepr {
    fn from(f: Frac) -> Self {
        FracRepr { num: f.num, den: f.den }
    }
}

impl Frac {
    pub const ZERO: Frac = Frac { num: 0, den: 1 };
    pub const ONE: Frac = Frac { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Self, TsirelsonError> {
        if den == 0 {
            return Err(TsirelsonError::InvalidFraction(format!("{num}/0")));
        }
        let g = num.gcd(&den);
        Ok(Frac { num: num / g, den: den / g })
    }

    fn from_u128(num: u128, den: u128) -> Result<Self, TsirelsonError> {
        let g = num.gcd(&den);
        let (n, d) = (num / g, den / g);
        match (u64::try_from(n), u64::try_from(d)) {
            (Ok(num), Ok(den)) => Ok(Frac { num, den }),
            _ => Err(TsirelsonError::Overflow),
        }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// The representative in [0,1).
    pub fn wrap(&self) -> Frac {
        Frac { num: self.num % self.den, den: self.den }
    }

    /// Numerators of self and other over their common denominator.
    fn common(&self, other: &Frac) -> (u128, u128, u128) {
        let den = (self.den as u128).lcm(&(other.den as u128));
        let a = self.num as u128 * (den / self.den as u128);
        let b = other.num as u128 * (den / other.den as u128);
        (a, b, den)
    }

    /// (self + other) mod 1, both in [0,1].
    pub fn add_mod1(&self, other: &Frac) -> Result<Frac, TsirelsonError> {
        let (a, b, den) = self.common(other);
        let a = a % den;
        let b = b % den;
        let sum = if a >= den - b { a - (den - b) } else { a + b };
        Frac::from_u128(sum, den)
    }

    /// (self − other) mod 1, both in [0,1].
    pub fn sub_mod1(&self, other: &Frac) -> Result<Frac, TsirelsonError> {
        let (a, b, den) = self.common(other);
        let a = a % den;
        let b = b % den;
        let diff = if a >= b { a - b } else { den - (b - a) };
        Frac::from_u128(diff, den)
    }
}

impl Ord for Frac {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl PartialOrd for Frac {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// A point of 𝕋 = ℝ/ℤ, either an exact reduced fraction in [0,1) or a
/// float in [0,1). Arithmetic between the two modes is refused.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TorusPoint {
    Exact(Frac),
    Float(f64),
}

impl TorusPoint {
    pub fn exact(num: u64, den: u64) -> Result<Self, TsirelsonError> {
        Ok(TorusPoint::Exact(Frac::new(num, den)?.wrap()))
    }

    /// x mod 1 as a float point.
    pub fn float(x: f64) -> Result<Self, TsirelsonError> {
        if !x.is_finite() {
            return Err(TsirelsonError::InvalidPoint(format!("{x}")));
        }
        let r = x.rem_euclid(1.0);
        // rem_euclid can round up to exactly 1 for tiny negative inputs.
        Ok(TorusPoint::Float(if r >= 1.0 { 0.0 } else { r }))
    }

    pub fn zero() -> Self {
        TorusPoint::Exact(Frac::ZERO)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, TorusPoint::Exact(_))
    }

    pub fn as_frac(&self) -> Option<Frac> {
        match self {
            TorusPoint::Exact(f) => Some(*f),
            TorusPoint::Float(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            TorusPoint::Exact(f) => f.to_f64(),
            TorusPoint::Float(x) => *x,
        }
    }

    pub fn add(&self, other: &TorusPoint) -> Result<TorusPoint, TsirelsonError> {
        match (self, other) {
            (TorusPoint::Exact(a), TorusPoint::Exact(b)) => Ok(TorusPoint::Exact(a.add_mod1(b)?)),
            (TorusPoint::Float(a), TorusPoint::Float(b)) => TorusPoint::float(a + b),
            _ => Err(TsirelsonError::MixedMode),
        }
    }

    pub fn sub(&self, other: &TorusPoint) -> Result<TorusPoint, TsirelsonError> {
        match (self, other) {
            (TorusPoint::Exact(a), TorusPoint::Exact(b)) => Ok(TorusPoint::Exact(a.sub_mod1(b)?)),
            (TorusPoint::Float(a), TorusPoint::Float(b)) => TorusPoint::float(a - b),
            _ => Err(TsirelsonError::MixedMode),
        }
    }

    /// Same point in float mode.
    pub fn to_float(&self) -> TorusPoint {
        TorusPoint::Float(self.to_f64())
    }
}

impl fmt::Display for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TorusPoint::Exact(x) => x.fmt(f),
            TorusPoint::Float(x) => write!(f, "{}", crate::numeric::fmt_g17(*x)),
        }
    }
}
