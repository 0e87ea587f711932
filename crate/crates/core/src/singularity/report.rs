use rayon::prelude::*;
use serde::Serialize;

use super::search::{scheme_singular_points, Jet, SingularPoint, SingularSearch};
use crate::christoffel::{eigen_sorted, slowness_polynomial, SphereSampling};
use crate::error::{Error, Result};
use crate::polyalg::{is_squarefree, squarefree_part, MultiPoly};
use crate::stiffness::{isotropic_parameters, validate, StiffnessTensor};

#[derive(Debug, Clone, Serialize)]
pub struct SmoothnessReport {
    pub scheme_smooth: bool,
    pub variety_smooth: bool,
    pub squarefree: bool,
    /// Common zeros of `P` and `∇P`.
    pub singular_points: Vec<SingularPoint>,
    /// Common zeros of the squarefree part and its gradient.
    pub radical_singular_points: Vec<SingularPoint>,
}

/// Runs the singular-point search on `P` and on its squarefree part.
pub fn variety_smoothness(p: &MultiPoly, search: SingularSearch) -> Result<SmoothnessReport> {
    let squarefree = is_squarefree(p)?;
    let singular_points = scheme_singular_points(p, search)?;
    let radical_singular_points = if squarefree {
        singular_points.clone()
    } else {
        scheme_singular_points(&squarefree_part(p)?, search)?
    };
    Ok(SmoothnessReport {
        scheme_smooth: singular_points.is_empty(),
        variety_smooth: radical_singular_points.is_empty(),
        squarefree,
        singular_points,
        radical_singular_points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegeneracyTolerances {
    /// Relative eigenvalue gap below which a branch point counts as degenerate.
    pub gap: f64,
    /// Normalized `‖∇P‖` below which a surface point counts as singular.
    pub gradient: f64,
}

impl Default for DegeneracyTolerances {
    fn default() -> Self {
        Self { gap: 1e-8, gradient: 1e-6 }
    }
}

/// Confusion counts between the eigen-gap and polynomial detectors over
/// surface points `p = u/√λ_k(u)`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct DegeneracyConsistency {
    pub surface_points: usize,
    pub both: usize,
    pub gap_only: usize,
    pub gradient_only: usize,
    pub neither: usize,
}

impl DegeneracyConsistency {
    pub fn consistent(&self) -> bool {
        self.gap_only == 0 && self.gradient_only == 0
    }
}

/// Compares the two degeneracy detectors at every positive branch of every
/// given direction. Needs `n ∈ {2, 3}` for the exact slowness polynomial.
pub fn degeneracy_equiv_check(c: &StiffnessTensor<f64>, directions: &[Vec<f64>], tol: DegeneracyTolerances) -> Result<DegeneracyConsistency> {
    let p = slowness_polynomial(&c.to_rational()?)?;
    let jet = Jet::new(&p);
    let degree = p.total_degree().unwrap_or(0) as i32;
    let flags: Vec<Vec<(bool, bool)>> = directions
        .par_iter()
        .map(|u| {
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            let u: Vec<f64> = u.iter().map(|v| v / norm).collect();
            let e = eigen_sorted(c, &u)?;
            let lam = &e.eigenvalues;
            let scale = lam.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let mut out = Vec::new();
            for k in 0..lam.len() {
                if lam[k] <= 0.0 {
                    continue;
                }
                let mut gap = f64::INFINITY;
                if k > 0 {
                    gap = gap.min((lam[k - 1] - lam[k]) / scale);
                }
                if k + 1 < lam.len() {
                    gap = gap.min((lam[k] - lam[k + 1]) / scale);
                }
                // Γ is 2-homogeneous, so this point has eigenvalue exactly 1
                let x: Vec<f64> = u.iter().map(|v| v / lam[k].sqrt()).collect();
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let g = jet.gradient(&x).iter().map(|v| v * v).sum::<f64>().sqrt();
                let g_rel = g / (jet.scale() * (1.0 + r).powi((degree - 1).max(0)));
                out.push((gap < tol.gap, g_rel < tol.gradient));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut report = DegeneracyConsistency::default();
    for (by_gap, by_grad) in flags.into_iter().flatten() {
        report.surface_points += 1;
        match (by_gap, by_grad) {
            (true, true) => report.both += 1,
            (true, false) => report.gap_only += 1,
            (false, true) => report.gradient_only += 1,
            (false, false) => report.neither += 1,
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct IsotropyCertificate {
    pub base_lambda: f64,
    pub base_mu: f64,
    pub epsilon: f64,
    pub min_gap: f64,
    /// `max_p ‖p − (p·v1) v1‖` over sampled unit `p`.
    pub max_deviation: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Certificate that `c` stays close to the isotropic `c0`: the qP gap stays
/// positive and the qP polarization stays within `epsilon` of the direction.
pub fn near_isotropic_certificate(c0: &StiffnessTensor<f64>, c: &StiffnessTensor<f64>, epsilon: f64, sampling: SphereSampling) -> Result<IsotropyCertificate> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    if c0.dim() != c.dim() {
        return Err(Error::DimensionMismatch { expected: c0.dim(), got: c.dim() });
    }
    let (lambda, mu) = isotropic_parameters(c0).ok_or_else(|| Error::InvalidInput("base tensor is not isotropic".into()))?;
    if validate(c0).positive_definite != Some(true) {
        return Err(Error::InvalidInput("base tensor is not positive definite".into()));
    }
    let check = validate(c);
    if !check.symmetric {
        return Err(Error::InvalidInput("perturbed tensor violates the elastic symmetries".into()));
    }
    let dirs = sampling.directions(c.dim())?;
    let stats: Vec<(f64, f64)> = dirs
        .par_iter()
        .map(|d| {
            let e = eigen_sorted(c, &d.unit)?;
            let l1 = e.eigenvalues[0];
            let gap = if l1 > 0.0 { ((l1 - e.eigenvalues[1]) / l1).max(0.0) } else { 0.0 };
            let v = e.vector(0);
            let proj: f64 = d.unit.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            let dev = d.unit.iter().zip(v.iter()).map(|(a, b)| (a - proj * b).powi(2)).sum::<f64>().sqrt();
            Ok((gap, dev))
        })
        .collect::<Result<_>>()?;
    let min_gap = stats.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let max_deviation = stats.iter().map(|s| s.1).fold(0.0, f64::max);
    Ok(IsotropyCertificate {
        base_lambda: lambda,
        base_mu: mu,
        epsilon,
        min_gap,
        max_deviation,
        samples: dirs.len(),
        pass: min_gap > 0.0 && max_deviation < epsilon,
    })
}

/// Certificates for `c0 + s·delta` at each scale `s`.
pub fn certificate_sweep(c0: &StiffnessTensor<f64>, delta: &StiffnessTensor<f64>, scales: &[f64], epsilon: f64, sampling: SphereSampling) -> Result<Vec<IsotropyCertificate>> {
    scales
        .iter()
        .map(|s| near_isotropic_certificate(c0, &c0.add(&delta.scaled(s))?, epsilon, sampling))
        .collect()
}
