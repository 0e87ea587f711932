//! Exact separateness classifier for two-dimensional stiffness tensors.
//!
//! With the components `c1111, c2222, c1122, c1212, c1112, c1222` define
//!
//! ```text
//! D1 = (c1212 + c1122)^2 - 4 c1112 c1222
//! D2 = (c1112 - c1222)^2 + (c1111 - c1212)(c2222 - c1212)
//! D  = D1 + D2
//! L  = c1122 c1222 + c1111 c1222 - c1112 c2222 - c1122 c1112
//! R  = L^2 - D1 D2
//! ```
//!
//! The Christoffel matrix has a multiple eigenvalue at some real `p ≠ 0`
//! exactly when `R = 0` and `D ≥ 0`.
//!
//! The multiple eigenvalue occurs where `F1` (the `h11 = h22` equation) and
//! `F2` (the `h12 = 0` equation) share a nonzero real root. They satisfy
//! `res(F1, F2, p2) = R p1^4` (Sylvester matrix of formal degrees 2, 2), `disc(F1, p2) = 4 D2 p1^2` and
//! `disc(F2, p2) = D1 p1^2`.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::christoffel::eigen_sorted;
use crate::error::{Error, Result};
use crate::polyalg::{gcd, MultiPoly};
use crate::scalar::{rational_string, Rational, Scalar};
use crate::stiffness::{AnyTensor, RationalTensor};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifierReport {
    #[serde(rename = "D1", with = "rational_string")]
    pub d1: Rational,
    #[serde(rename = "D2", with = "rational_string")]
    pub d2: Rational,
    #[serde(rename = "D", with = "rational_string")]
    pub d: Rational,
    #[serde(rename = "L", with = "rational_string")]
    pub l: Rational,
    #[serde(rename = "R", with = "rational_string")]
    pub r: Rational,
    #[serde(rename = "multiple_eigenvalue")]
    pub has_multiple_eigenvalue: bool,
    /// Unit covector where the two eigenvalues coincide.
    pub witness: Option<Vec<f64>>,
}

struct Components {
    c1111: Rational,
    c2222: Rational,
    c1122: Rational,
    c1212: Rational,
    c1112: Rational,
    c1222: Rational,
}

fn components(c: &RationalTensor) -> Result<Components> {
    if c.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: c.dim() });
    }
    Ok(Components {
        c1111: c.get(0, 0, 0, 0).clone(),
        c2222: c.get(1, 1, 1, 1).clone(),
        c1122: c.get(0, 0, 1, 1).clone(),
        c1212: c.get(0, 1, 0, 1).clone(),
        c1112: c.get(0, 0, 0, 1).clone(),
        c1222: c.get(0, 1, 1, 1).clone(),
    })
}

fn invariants(k: &Components) -> [Rational; 5] {
    let four = Rational::from_i64(4);
    let s = &k.c1212 + &k.c1122;
    let d1 = &s * &s - four * &k.c1112 * &k.c1222;
    let t = &k.c1112 - &k.c1222;
    let d2 = &t * &t + (&k.c1111 - &k.c1212) * (&k.c2222 - &k.c1212);
    let l = &k.c1122 * &k.c1222 + &k.c1111 * &k.c1222 - &k.c1112 * &k.c2222 - &k.c1122 * &k.c1112;
    let r = &l * &l - &d1 * &d2;
    [d1.clone(), d2.clone(), d1 + d2, l, r]
}

pub fn classifier_invariants(c: &RationalTensor) -> Result<ClassifierReport> {
    let [d1, d2, d, l, r] = invariants(&components(c)?);
    let multiple = r.is_zero() && !d.is_negative();
    let witness = if multiple { witness_direction(c)? } else { None };
    Ok(ClassifierReport {
        d1,
        d2,
        d,
        l,
        r,
        has_multiple_eigenvalue: multiple,
        witness,
    })
}

/// Classifier entry point for parsed tensor files; floats are rejected.
pub fn classify_any(c: &AnyTensor) -> Result<ClassifierReport> {
    match c {
        AnyTensor::Rational(t) => classifier_invariants(t),
        AnyTensor::Float(_) => Err(Error::ExactScalarsRequired),
    }
}

pub fn has_multiple_eigenvalue(c: &RationalTensor) -> Result<bool> {
    let [_, _, d, _, r] = invariants(&components(c)?);
    Ok(r.is_zero() && !d.is_negative())
}

const VARS: [&str; 2] = ["p1", "p2"];

fn binary_form(a: Rational, b: Rational, c: Rational) -> MultiPoly {
    MultiPoly::from_terms(&VARS, [(vec![2, 0], a), (vec![1, 1], b), (vec![0, 2], c)])
}

/// `(F1, F2)` in `p1, p2`: `F1` is the `h11 − h22` form, `F2` the `h12` form.
pub fn build_f1_f2(c: &RationalTensor) -> Result<(MultiPoly, MultiPoly)> {
    let k = components(c)?;
    let two = Rational::from_i64(2);
    let f1 = binary_form(&k.c1111 - &k.c1212, two * (&k.c1112 - &k.c1222), &k.c1212 - &k.c2222);
    let f2 = binary_form(k.c1112.clone(), &k.c1212 + &k.c1122, k.c1222.clone());
    Ok((f1, f2))
}

/// Real projective roots of a binary form of degree ≤ 2, as unit vectors.
fn real_directions(form: &MultiPoly) -> Vec<Vec<f64>> {
    let a = form.coefficient(&[2, 0]).to_f64();
    let b = form.coefficient(&[1, 1]).to_f64();
    let c = form.coefficient(&[0, 2]).to_f64();
    let deg = form.total_degree().unwrap_or(0);
    let unit = |x: f64, y: f64| {
        let n = x.hypot(y);
        vec![x / n, y / n]
    };
    if deg == 1 {
        // u p1 + v p2
        let u = form.coefficient(&[1, 0]).to_f64();
        let v = form.coefficient(&[0, 1]).to_f64();
        return vec![unit(v, -u)];
    }
    if a == 0.0 {
        // p2 (b p1 + c p2)
        let mut out = vec![vec![1.0, 0.0]];
        if b != 0.0 {
            out.push(unit(c, -b));
        }
        return out;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    // p1/p2 = (-b ± √disc) / 2a
    let s = disc.sqrt();
    vec![unit(-b + s, 2.0 * a), unit(-b - s, 2.0 * a)]
}

fn pair_gap(c: &crate::stiffness::StiffnessTensor<f64>, p: &[f64]) -> f64 {
    eigen_sorted(c, p).map(|e| (e.eigenvalues[0] - e.eigenvalues[1]).abs()).unwrap_or(f64::INFINITY)
}

/// Direction realizing the multiple eigenvalue, from the common factor of
/// `F1` and `F2`; `None` if no real common root exists.
pub fn witness_direction(c: &RationalTensor) -> Result<Option<Vec<f64>>> {
    let (f1, f2) = build_f1_f2(c)?;
    let common = gcd(&f1, &f2);
    if common.is_zero() {
        return Ok(Some(vec![1.0, 0.0]));
    }
    if common.is_constant() {
        return Ok(None);
    }
    let cf = c.to_f64();
    Ok(real_directions(&common)
        .into_iter()
        .min_by(|p, q| pair_gap(&cf, p).total_cmp(&pair_gap(&cf, q))))
}

/// Tensor whose two eigenvalues coincide along the rational direction
/// `(a, b)` with `ab ≠ 0`: `c1122` and `c1111` are solved from
/// `F2(a, b) = 0` and `F1(a, b) = 0`, the other components are given.
pub fn degenerate_along(a: &Rational, b: &Rational, c1212: Rational, c2222: Rational, c1112: Rational, c1222: Rational) -> Result<RationalTensor> {
    if a.is_zero() || b.is_zero() {
        return Err(Error::InvalidInput("direction must have both components nonzero".into()));
    }
    // F2: c1112 a^2 + (c1212 + c1122) a b + c1222 b^2 = 0
    let c1122 = -(&c1112 * a * a + &c1222 * b * b) / (a * b) - &c1212;
    // F1: (c1111 - c1212) a^2 + 2 (c1112 - c1222) a b + (c1212 - c2222) b^2 = 0
    let two = Rational::from_i64(2);
    let c1111 = &c1212 - (two * (&c1112 - &c1222) * a * b + (&c1212 - &c2222) * b * b) / (a * a);
    RationalTensor::from_components(
        2,
        [
            ([0, 0, 0, 0], c1111),
            ([1, 1, 1, 1], c2222),
            ([0, 0, 1, 1], c1122),
            ([0, 1, 0, 1], c1212),
            ([0, 0, 0, 1], c1112),
            ([0, 1, 1, 1], c1222),
        ],
    )
}
