use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

use super::tensor::{isotropic_parameters, make_isotropic, validate, StiffnessTensor};

/// Region on which a stiffness field lives.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Axis-aligned box `lo < x < hi`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `R < |x| < 1` in `dim` dimensions.
    Annulus { dim: usize, inner_radius: f64 },
}

impl Domain {
    pub fn annulus(dim: usize, inner_radius: f64) -> Result<Self> {
        if !(inner_radius > 0.0 && inner_radius < 1.0) {
            return Err(Error::InvalidInput(format!("annulus inner radius {inner_radius} not in (0, 1)")));
        }
        if dim < 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        Ok(Domain::Annulus { dim, inner_radius })
    }

    pub fn cube(dim: usize, half_width: f64) -> Self {
        Domain::Box {
            lo: vec![-half_width; dim],
            hi: vec![half_width; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lo, .. } => lo.len(),
            Domain::Annulus { dim, .. } => *dim,
        }
    }

    /// Positive inside, zero on the boundary, negative outside.
    pub fn level(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&xi, (&l, &h))| (xi - l).min(h - xi))
                .fold(f64::INFINITY, f64::min),
            Domain::Annulus { inner_radius, .. } => {
                let r = norm(x);
                (r - inner_radius).min(1.0 - r)
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.level(x) >= 0.0
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| (h - l) * (h - l)).sum::<f64>().sqrt(),
            Domain::Annulus { .. } => 2.0,
        }
    }

    /// Whether a field may be evaluated at `x`. Fields are extended past the
    /// boundary (the annulus up to its inner radius halved, boxes by half their size).
    pub fn evaluable(&self, x: &[f64]) -> bool {
        match self {
            Domain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&xi, (&l, &h))| xi >= l - 0.5 * (h - l) && xi <= h + 0.5 * (h - l)),
            Domain::Annulus { inner_radius, .. } => norm(x) >= 0.5 * inner_radius,
        }
    }

    /// Inward unit normal at a boundary point (within `tol` of the boundary).
    pub fn inward_normal(&self, z: &[f64], tol: f64) -> Result<Vec<f64>> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        match self {
            Domain::Box { lo, hi } => {
                let mut best: Option<(f64, usize, f64)> = None;
                for (i, (&l, &h)) in lo.iter().zip(hi).enumerate() {
                    for (d, sign) in [((z[i] - l).abs(), 1.0), ((h - z[i]).abs(), -1.0)] {
                        if best.map_or(true, |b| d < b.0) {
                            best = Some((d, i, sign));
                        }
                    }
                }
                let (d, i, sign) = best.unwrap();
                if d > tol || self.level(z) < -tol {
                    return Err(Error::InvalidInput(format!("{z:?} is not on the boundary")));
                }
                let mut n = vec![0.0; z.len()];
                n[i] = sign;
                Ok(n)
            }
            Domain::Annulus { inner_radius, .. } => {
                let r = norm(z);
                if (r - 1.0).abs() <= tol {
                    Ok(z.iter().map(|v| -v / r).collect())
                } else if (r - inner_radius).abs() <= tol {
                    Ok(z.iter().map(|v| v / r).collect())
                } else {
                    Err(Error::InvalidInput(format!("{z:?} is not on the boundary")))
                }
            }
        }
    }
}

/// Scalar radial profile `r -> value`.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialProfile {
    /// `Σ a_k r^k`.
    Polynomial(Vec<f64>),
    /// Monotone piecewise-cubic (Fritsch–Carlson) interpolation of samples;
    /// constant extrapolation outside the table.
    Table { r: Vec<f64>, values: Vec<f64>, slopes: Vec<f64> },
}

impl RadialProfile {
    pub fn constant(v: f64) -> Self {
        RadialProfile::Polynomial(vec![v])
    }

    pub fn table(r: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if r.len() != values.len() || r.len() < 2 {
            return Err(Error::InvalidInput("profile table needs ≥ 2 matching samples".into()));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("profile radii must be strictly increasing".into()));
        }
        let slopes = fritsch_carlson_slopes(&r, &values);
        Ok(RadialProfile::Table { r, values, slopes })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Polynomial(a) => a.iter().rev().fold(0.0, |acc, &c| acc * r + c),
            RadialProfile::Table { r: rs, values, slopes } => {
                if r <= rs[0] {
                    return values[0];
                }
                if r >= rs[rs.len() - 1] {
                    return values[values.len() - 1];
                }
                let k = rs.partition_point(|&x| x <= r) - 1;
                let h = rs[k + 1] - rs[k];
                let t = (r - rs[k]) / h;
                let (t2, t3) = (t * t, t * t * t);
                let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
                let h10 = t3 - 2.0 * t2 + t;
                let h01 = -2.0 * t3 + 3.0 * t2;
                let h11 = t3 - t2;
                h00 * values[k] + h10 * h * slopes[k] + h01 * values[k + 1] + h11 * h * slopes[k + 1]
            }
        }
    }

    /// Analytic derivative for polynomials, derivative of the interpolant for tables.
    pub fn derivative(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Polynomial(a) => a
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &c)| acc * r + k as f64 * c),
            RadialProfile::Table { r: rs, values, slopes } => {
                if r <= rs[0] || r >= rs[rs.len() - 1] {
                    return 0.0;
                }
                let k = rs.partition_point(|&x| x <= r) - 1;
                let h = rs[k + 1] - rs[k];
                let t = (r - rs[k]) / h;
                let t2 = t * t;
                let d00 = (6.0 * t2 - 6.0 * t) / h;
                let d10 = 3.0 * t2 - 4.0 * t + 1.0;
                let d01 = (-6.0 * t2 + 6.0 * t) / h;
                let d11 = 3.0 * t2 - 2.0 * t;
                d00 * values[k] + d10 * slopes[k] + d01 * values[k + 1] + d11 * slopes[k + 1]
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            RadialProfile::Polynomial(a) => a.iter().skip(1).all(|&c| c == 0.0),
            RadialProfile::Table { values, .. } => values.iter().all(|&v| v == values[0]),
        }
    }
}

fn fritsch_carlson_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k])).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for k in 1..n - 1 {
        m[k] = if delta[k - 1] * delta[k] <= 0.0 {
            0.0
        } else {
            (delta[k - 1] + delta[k]) / 2.0
        };
    }
    for k in 0..n - 1 {
        if delta[k] == 0.0 {
            m[k] = 0.0;
            m[k + 1] = 0.0;
            continue;
        }
        let a = m[k] / delta[k];
        let b = m[k + 1] / delta[k];
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            m[k] = tau * a * delta[k];
            m[k + 1] = tau * b * delta[k];
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    Constant(StiffnessTensor<f64>),
    /// Isotropic with Lamé profiles depending on `r = |x|`.
    IsotropicRadial { lambda: RadialProfile, mu: RadialProfile },
    /// Isotropic radial base plus a constant anisotropic perturbation.
    PerturbedIsotropic {
        lambda: RadialProfile,
        mu: RadialProfile,
        delta: StiffnessTensor<f64>,
    },
}

/// Stiffness tensor field on a domain, with a declared regularity `C^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessField {
    domain: Domain,
    kind: FieldKind,
    regularity: u32,
}

impl StiffnessField {
    pub fn new(domain: Domain, kind: FieldKind, regularity: u32) -> Result<Self> {
        let dim = domain.dim();
        if let Domain::Annulus { inner_radius, .. } = domain {
            Domain::annulus(dim, inner_radius)?;
        }
        if let Domain::Box { lo, hi } = &domain {
            if lo.len() != hi.len() || lo.iter().zip(hi).any(|(l, h)| l >= h) {
                return Err(Error::InvalidInput("box needs lo < hi componentwise".into()));
            }
        }
        match &kind {
            FieldKind::Constant(c) | FieldKind::PerturbedIsotropic { delta: c, .. } if c.dim() != dim => {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.dim(),
                })
            }
            FieldKind::Constant(c) => {
                let report = validate(c);
                if !report.is_valid() {
                    return Err(Error::InvalidInput("constant tensor is not symmetric positive definite".into()));
                }
            }
            _ => {}
        }
        Ok(Self {
            domain,
            kind,
            regularity,
        })
    }

    pub fn constant(domain: Domain, c: StiffnessTensor<f64>) -> Result<Self> {
        Self::new(domain, FieldKind::Constant(c), u32::MAX)
    }

    /// Isotropic radial field with P-wave speed profile `c_P(r)` given as a
    /// polynomial in `r`; λ = c_P²/2 and μ = c_P²/4.
    pub fn isotropic_speed_polynomial(domain: Domain, speed: &[f64]) -> Result<Self> {
        let sq = poly_square(speed);
        let lambda = RadialProfile::Polynomial(sq.iter().map(|c| c / 2.0).collect());
        let mu = RadialProfile::Polynomial(sq.iter().map(|c| c / 4.0).collect());
        Self::new(domain, FieldKind::IsotropicRadial { lambda, mu }, u32::MAX)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn regularity(&self) -> u32 {
        self.regularity
    }

    /// True when the tensor does not depend on `x`.
    pub fn is_constant(&self) -> bool {
        match &self.kind {
            FieldKind::Constant(_) => true,
            FieldKind::IsotropicRadial { lambda, mu } | FieldKind::PerturbedIsotropic { lambda, mu, .. } => {
                lambda.is_constant() && mu.is_constant()
            }
        }
    }

    pub fn is_spherically_symmetric(&self) -> bool {
        match &self.kind {
            FieldKind::Constant(c) => isotropic_parameters(c).is_some(),
            FieldKind::IsotropicRadial { .. } => true,
            FieldKind::PerturbedIsotropic { delta, .. } => isotropic_parameters(delta).is_some(),
        }
    }

    /// P-wave speed `sqrt(λ + 2μ)` at radius `r` for spherically symmetric fields.
    pub fn radial_p_speed(&self, r: f64) -> Result<f64> {
        match &self.kind {
            FieldKind::Constant(c) => {
                let (l, m) = isotropic_parameters(c).ok_or(Error::NonRadialField)?;
                Ok((l + 2.0 * m).sqrt())
            }
            FieldKind::IsotropicRadial { lambda, mu } => Ok((lambda.eval(r) + 2.0 * mu.eval(r)).sqrt()),
            FieldKind::PerturbedIsotropic { lambda, mu, delta } => {
                let (l, m) = isotropic_parameters(delta).ok_or(Error::NonRadialField)?;
                Ok((lambda.eval(r) + l + 2.0 * (mu.eval(r) + m)).sqrt())
            }
        }
    }

    /// Tensor at `x`. Points outside [`Domain::evaluable`] are rejected.
    pub fn tensor_at(&self, x: &[f64]) -> Result<StiffnessTensor<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !self.domain.evaluable(x) {
            return Err(Error::OutsideDomain(x.to_vec()));
        }
        Ok(self.tensor_at_unchecked(x))
    }

    pub(crate) fn tensor_at_unchecked(&self, x: &[f64]) -> StiffnessTensor<f64> {
        match &self.kind {
            FieldKind::Constant(c) => c.clone(),
            FieldKind::IsotropicRadial { lambda, mu } => {
                let r = dot(x, x).sqrt();
                make_isotropic(self.dim(), lambda.eval(r), mu.eval(r))
            }
            FieldKind::PerturbedIsotropic { lambda, mu, delta } => {
                let r = dot(x, x).sqrt();
                make_isotropic(self.dim(), lambda.eval(r), mu.eval(r))
                    .add(delta)
                    .expect("dimensions checked at construction")
            }
        }
    }
}

fn poly_square(a: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; (2 * a.len()).saturating_sub(1)];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in a.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}
