//! Scalar kinds for stiffness tensors: exact rationals and `f64`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::Neg;

pub type Rational = BigRational;

/// Field elements a stiffness tensor can carry.
pub trait Scalar: Clone + Debug + PartialEq + PartialOrd + Num + Signed + Neg<Output = Self> + Send + Sync {
    const KIND: ScalarKind;

    fn from_i64(v: i64) -> Self;
    fn to_f64(&self) -> f64;
    /// Exact rational value, `None` for non-finite floats.
    fn to_rational(&self) -> Option<Rational>;

    /// Equality used by symmetry validation: exact for rationals,
    /// relative to `scale` for floats.
    fn approx_eq(&self, other: &Self, scale: f64) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    Rational,
    Float,
}

impl Scalar for f64 {
    const KIND: ScalarKind = ScalarKind::Float;

    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_rational(&self) -> Option<Rational> {
        Rational::from_f64(*self)
    }
    fn approx_eq(&self, other: &Self, scale: f64) -> bool {
        (self - other).abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE)
    }
}

impl Scalar for Rational {
    const KIND: ScalarKind = ScalarKind::Rational;

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }
    fn approx_eq(&self, other: &Self, _scale: f64) -> bool {
        self == other
    }
}

/// Serde adapter writing rationals as `p/q` strings.
pub mod rational_string {
    use super::{rational_to_string, Rational};

    pub fn serialize<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rational_to_string(r))
    }
}

/// `p/q` rendering used in JSON and golden files (always with a denominator).
pub fn rational_to_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `p/q`, `p`, or a decimal like `-1.25` into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Some(Rational::from_integer(n));
    }
    // decimal notation, kept exact
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}0").parse().ok()?;
    let ten = BigInt::from(10);
    let scale = frac_part.len() as i32 + 1 - exp;
    let mut r = Rational::from_integer(digits);
    if scale >= 0 {
        r /= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r *= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -r } else { r })
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}
