//! The qP Hamiltonian `½λ_qP(x, p)`, its Legendre transform, the Finsler
//! function `F(x, y) = √λ_qP(x, ℓ⁻¹(y))`, the fundamental tensor and the
//! geodesic spray.
//!
//! Eigenvalue derivatives use first- and second-order perturbation theory,
//! which is valid while the largest eigenvalue of `Γ(p)` stays simple.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigen, EigenSystem};
use crate::stiffness::{StiffnessField, StiffnessTensor};
use crate::christoffel::christoffel_matrix;

mod battery;

pub use battery::{invariant_battery, BatteryOptions, BatteryReport, InvariantCheck};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FinslerOptions {
    /// Relative qP gap `(λ1 − λ2)/λ1` below which a direction is refused.
    pub gap_threshold: f64,
    pub newton_max_iterations: usize,
    /// Relative residual `‖ℓ(p) − y‖/‖y‖` accepted by the inverse map.
    pub newton_tolerance: f64,
    /// Relative fiber step for the finite-difference fundamental tensor.
    pub fiber_step: f64,
    /// Base-point step for the spray, relative to the domain half-diameter.
    pub base_step: f64,
}

impl Default for FinslerOptions {
    fn default() -> Self {
        Self {
            gap_threshold: 1e-6,
            newton_max_iterations: 50,
            newton_tolerance: 1e-8,
            fiber_step: 1e-4,
            base_step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CotangentSample {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangentSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FundamentalTensorSample {
    pub g: Vec<Vec<f64>>,
    pub condition_number: f64,
    pub min_eigenvalue: f64,
}

impl FundamentalTensorSample {
    fn from_matrix(g: &DMatrix<f64>) -> Result<Self> {
        let e = jacobi_eigen(g);
        let max = e.eigenvalues[0];
        let min = *e.eigenvalues.last().unwrap();
        if !(min > 0.0) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
        Ok(Self {
            g: (0..g.nrows()).map(|i| g.row(i).iter().copied().collect()).collect(),
            condition_number: max / min,
            min_eigenvalue: min,
        })
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.g.len();
        DMatrix::from_fn(n, n, |i, j| self.g[i][j])
    }
}

/// `λ_qP` at a fixed tensor with its `p`-gradient and `p`-Hessian.
#[derive(Debug, Clone)]
pub struct QpJet {
    pub lambda: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    pub rel_gap: f64,
}

fn d_gamma(c: &StiffnessTensor<f64>, p: &[f64], m: usize) -> DMatrix<f64> {
    let n = c.dim();
    DMatrix::from_fn(n, n, |i, l| (0..n).map(|k| (c.get(i, m, k, l) + c.get(i, k, m, l)) * p[k]).sum())
}

fn dd_gamma(c: &StiffnessTensor<f64>, m: usize, q: usize) -> DMatrix<f64> {
    let n = c.dim();
    DMatrix::from_fn(n, n, |i, l| c.get(i, m, q, l) + c.get(i, q, m, l))
}

fn eigen(c: &StiffnessTensor<f64>, p: &[f64]) -> Result<EigenSystem> {
    if p.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroCovector);
    }
    Ok(jacobi_eigen(&christoffel_matrix(c, p)?.to_matrix()))
}

fn relative_gap(e: &EigenSystem) -> f64 {
    let l1 = e.eigenvalues[0];
    if l1 <= 0.0 {
        0.0
    } else {
        (l1 - e.eigenvalues[1]) / l1
    }
}

/// Eigenvalue, gradient and Hessian of `λ_qP` in `p` for a fixed tensor.
pub fn qp_jet(c: &StiffnessTensor<f64>, p: &[f64], gap_threshold: f64) -> Result<QpJet> {
    let e = eigen(c, p)?;
    let gap = relative_gap(&e);
    if !(gap >= gap_threshold) {
        return Err(Error::DegenerateDirection { gap, threshold: gap_threshold });
    }
    let n = c.dim();
    let v1 = e.vector(0);
    let dg: Vec<DMatrix<f64>> = (0..n).map(|m| d_gamma(c, p, m)).collect();
    let gradient = DVector::from_fn(n, |m, _| v1.dot(&(&dg[m] * &v1)));
    // couplings (v_k · ∂_m Γ v1) for the second-order term
    let coupling: Vec<Vec<f64>> = (1..n)
        .map(|k| {
            let vk = e.vector(k);
            (0..n).map(|m| vk.dot(&(&dg[m] * &v1))).collect()
        })
        .collect();
    let mut hessian = DMatrix::zeros(n, n);
    for m in 0..n {
        for q in m..n {
            let mut h = v1.dot(&(dd_gamma(c, m, q) * &v1));
            for (k, row) in coupling.iter().enumerate() {
                h += 2.0 * row[m] * row[q] / (e.eigenvalues[0] - e.eigenvalues[k + 1]);
            }
            hessian[(m, q)] = h;
            hessian[(q, m)] = h;
        }
    }
    Ok(QpJet {
        lambda: e.eigenvalues[0],
        gradient,
        hessian,
        rel_gap: gap,
    })
}

/// The qP Finsler structure of a stiffness field.
#[derive(Debug, Clone)]
pub struct QpFinsler {
    field: StiffnessField,
    opts: FinslerOptions,
}

impl QpFinsler {
    pub fn new(field: StiffnessField) -> Self {
        Self::with_options(field, FinslerOptions::default())
    }

    pub fn with_options(field: StiffnessField, opts: FinslerOptions) -> Self {
        Self { field, opts }
    }

    pub fn field(&self) -> &StiffnessField {
        &self.field
    }

    pub fn options(&self) -> &FinslerOptions {
        &self.opts
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    fn tensor(&self, x: &[f64]) -> Result<StiffnessTensor<f64>> {
        self.field.tensor_at(x)
    }

    fn jet_at(&self, c: &StiffnessTensor<f64>, p: &[f64]) -> Result<QpJet> {
        qp_jet(c, p, self.opts.gap_threshold)
    }

    /// `λ_qP(x, p)`, the largest eigenvalue of `Γ_{c(x)}(p)`.
    pub fn hamiltonian(&self, x: &[f64], p: &[f64]) -> Result<f64> {
        let c = self.tensor(x)?;
        let e = eigen(&c, p)?;
        let gap = relative_gap(&e);
        if !(gap >= self.opts.gap_threshold) {
            return Err(Error::DegenerateDirection { gap, threshold: self.opts.gap_threshold });
        }
        Ok(e.eigenvalues[0])
    }

    /// `y = ∂_p(½λ_qP)`.
    pub fn legendre_forward(&self, x: &[f64], p: &[f64]) -> Result<TangentSample> {
        let jet = self.jet_at(&self.tensor(x)?, p)?;
        Ok(TangentSample {
            x: x.to_vec(),
            y: (jet.gradient * 0.5).as_slice().to_vec(),
        })
    }

    fn inverse_at(&self, c: &StiffnessTensor<f64>, y: &[f64]) -> Result<(Vec<f64>, QpJet)> {
        let n = y.len();
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if ny == 0.0 {
            return Err(Error::ZeroVector);
        }
        let target = DVector::from_column_slice(y);
        let u: Vec<f64> = y.iter().map(|v| v / ny).collect();
        let lam_u = self.jet_at(c, &u)?.lambda;
        // start on the ray of y, scaled so the forward image has length |y|
        let mut p = DVector::from_vec(u.iter().map(|v| v * ny / lam_u).collect());
        let mut jet = self.jet_at(c, p.as_slice())?;
        let f0 = &jet.gradient * 0.5;
        p *= ny / f0.norm();
        jet = self.jet_at(c, p.as_slice())?;
        let mut resid = &jet.gradient * 0.5 - &target;
        let mut best = resid.norm();
        let mut stalled = 0;
        for _ in 0..self.opts.newton_max_iterations {
            if best <= 4.0 * f64::EPSILON * ny {
                break;
            }
            let Some(step) = (&jet.hessian * 0.5).lu().solve(&(-&resid)) else { break };
            let mut t = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let trial = &p + &step * t;
                if let Ok(tj) = self.jet_at(c, trial.as_slice()) {
                    let tr = &tj.gradient * 0.5 - &target;
                    if tr.norm() < best {
                        p = trial;
                        jet = tj;
                        resid = tr;
                        best = resid.norm();
                        improved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !improved {
                stalled += 1;
                if stalled > 1 {
                    break;
                }
            }
        }
        if best > self.opts.newton_tolerance * ny {
            return Err(Error::NoConvergence {
                iterations: self.opts.newton_max_iterations,
                residual: best / ny,
                last: p.as_slice().to_vec(),
            });
        }
        debug_assert_eq!(p.len(), n);
        Ok((p.as_slice().to_vec(), jet))
    }

    /// `p = ℓ⁻¹(y)` by damped Newton on the gradient map.
    pub fn legendre_inverse(&self, x: &[f64], y: &[f64]) -> Result<CotangentSample> {
        let (p, _) = self.inverse_at(&self.tensor(x)?, y)?;
        Ok(CotangentSample { x: x.to_vec(), p })
    }

    /// `F(x, y) = √λ_qP(x, ℓ⁻¹(y))`.
    pub fn finsler(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let (_, jet) = self.inverse_at(&self.tensor(x)?, y)?;
        Ok(jet.lambda.sqrt())
    }

    /// `g_ij = ½ ∂²F²/∂y_i∂y_j` by central second differences with step
    /// `fiber_step · |y|`.
    pub fn fundamental_tensor(&self, x: &[f64], y: &[f64]) -> Result<FundamentalTensorSample> {
        let c = self.tensor(x)?;
        let n = y.len();
        let h = self.opts.fiber_step * y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let f2 = |dy: &[(usize, f64)]| -> Result<f64> {
            let mut z = y.to_vec();
            for &(i, d) in dy {
                z[i] += d;
            }
            Ok(self.inverse_at(&c, &z)?.1.lambda)
        };
        let center = f2(&[])?;
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            let second = (f2(&[(i, h)])? - 2.0 * center + f2(&[(i, -h)])?) / (h * h);
            g[(i, i)] = 0.5 * second;
            for j in 0..i {
                let mixed = (f2(&[(i, h), (j, h)])? - f2(&[(i, h), (j, -h)])? - f2(&[(i, -h), (j, h)])? + f2(&[(i, -h), (j, -h)])?) / (4.0 * h * h);
                g[(i, j)] = 0.5 * mixed;
                g[(j, i)] = 0.5 * mixed;
            }
        }
        FundamentalTensorSample::from_matrix(&g)
    }

    fn dual_metric(&self, c: &StiffnessTensor<f64>, y: &[f64]) -> Result<DMatrix<f64>> {
        let (_, jet) = self.inverse_at(c, y)?;
        let h = &jet.hessian * 0.5;
        let inv = h.try_inverse().ok_or(Error::NotPositiveDefinite { min_eigenvalue: 0.0 })?;
        Ok((&inv + inv.transpose()) * 0.5)
    }

    /// `g = (Hess_p ½λ_qP)⁻¹` at `p = ℓ⁻¹(y)`, the same tensor without
    /// finite differences in `y`.
    pub fn fundamental_tensor_dual(&self, x: &[f64], y: &[f64]) -> Result<FundamentalTensorSample> {
        FundamentalTensorSample::from_matrix(&self.dual_metric(&self.tensor(x)?, y)?)
    }

    fn metric_at_unchecked(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        if !self.field.domain().evaluable(x) {
            return Err(Error::StencilOutsideDomain { point: x.to_vec() });
        }
        self.dual_metric(&self.field.tensor_at_unchecked(x), y)
    }

    /// Spray coefficients `G^i = ¼ g^{il}(2 ∂_k g_jl − ∂_l g_jk) y^j y^k`,
    /// with `∂g/∂x` from a fourth-order central stencil.
    pub fn spray(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if x.len() != n || y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len().min(y.len()) });
        }
        if self.field.is_constant() {
            return Ok(vec![0.0; n]);
        }
        let g = self.metric_at_unchecked(x, y)?;
        let h = self.opts.base_step * 0.5 * self.field.domain().diameter();
        let mut dg = Vec::with_capacity(n);
        for k in 0..n {
            let shifted = |s: f64| {
                let mut z = x.to_vec();
                z[k] += s * h;
                self.metric_at_unchecked(&z, y)
            };
            let d = (shifted(-2.0)? - shifted(2.0)? + (shifted(1.0)? - shifted(-1.0)?) * 8.0) / (12.0 * h);
            dg.push(d);
        }
        let ginv = g.try_inverse().ok_or(Error::NotPositiveDefinite { min_eigenvalue: 0.0 })?;
        // b_l = Σ_jk (2 ∂_k g_jl − ∂_l g_jk) y^j y^k
        let b = DVector::from_fn(n, |l, _| {
            let mut s = 0.0;
            for j in 0..n {
                for k in 0..n {
                    s += (2.0 * dg[k][(j, l)] - dg[l][(j, k)]) * y[j] * y[k];
                }
            }
            s
        });
        Ok((ginv * b * 0.25).as_slice().to_vec())
    }
}

pub fn qp_hamiltonian(field: &StiffnessField, x: &[f64], p: &[f64]) -> Result<f64> {
    QpFinsler::new(field.clone()).hamiltonian(x, p)
}

pub fn legendre_forward(field: &StiffnessField, x: &[f64], p: &[f64]) -> Result<TangentSample> {
    QpFinsler::new(field.clone()).legendre_forward(x, p)
}

pub fn legendre_inverse(field: &StiffnessField, x: &[f64], y: &[f64]) -> Result<CotangentSample> {
    QpFinsler::new(field.clone()).legendre_inverse(x, y)
}

pub fn finsler_qp(field: &StiffnessField, x: &[f64], y: &[f64]) -> Result<f64> {
    QpFinsler::new(field.clone()).finsler(x, y)
}

pub fn fundamental_tensor(field: &StiffnessField, x: &[f64], y: &[f64]) -> Result<FundamentalTensorSample> {
    QpFinsler::new(field.clone()).fundamental_tensor(x, y)
}

pub fn spray_coefficients(field: &StiffnessField, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    QpFinsler::new(field.clone()).spray(x, y)
}
