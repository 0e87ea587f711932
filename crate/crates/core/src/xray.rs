//! Forward geodesic X-ray transform in an annulus and a least-squares
//! injectivity experiment.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finsler::QpFinsler;
use crate::geodesics::{integrate_geodesic, GeodesicOptions, GeodesicPath};
use crate::stiffness::Domain;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarField {
    Constant { value: f64 },
    /// `Σ a_k r^k`.
    RadialPolynomial { coefficients: Vec<f64> },
    /// `(Σ a_k r^k) · cos(mθ)`, or `sin(mθ)` when `sine` is set; `θ` is the
    /// polar angle in the `x1x2`-plane.
    Separable { radial: Vec<f64>, harmonic: u32, sine: bool },
}

fn horner(a: &[f64], r: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, c| acc * r + c)
}

impl ScalarField {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        match self {
            ScalarField::Constant { value } => *value,
            ScalarField::RadialPolynomial { coefficients } => horner(coefficients, r),
            ScalarField::Separable { radial, harmonic, sine } => {
                let arg = *harmonic as f64 * x[1].atan2(x[0]);
                horner(radial, r) * if *sine { arg.sin() } else { arg.cos() }
            }
        }
    }

    /// True when the field vanishes identically.
    pub fn is_zero(&self) -> bool {
        match self {
            ScalarField::Constant { value } => *value == 0.0,
            ScalarField::RadialPolynomial { coefficients } => coefficients.iter().all(|&c| c == 0.0),
            ScalarField::Separable { radial, harmonic, sine } => radial.iter().all(|&c| c == 0.0) || (*sine && *harmonic == 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XRayIntegral {
    pub value: f64,
    /// `|I_h − I_2h|`.
    pub error: f64,
}

/// Simpson's rule on an arbitrary increasing grid; a trailing odd interval
/// is integrated with the quadratic through the last three nodes.
fn simpson(ts: &[f64], fs: &[f64]) -> f64 {
    let m = ts.len();
    if m < 2 {
        return 0.0;
    }
    if m == 2 {
        return 0.5 * (ts[1] - ts[0]) * (fs[0] + fs[1]);
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 < m {
        let (h0, h1) = (ts[i + 1] - ts[i], ts[i + 2] - ts[i + 1]);
        let s = h0 + h1;
        total += s / 6.0 * ((2.0 - h1 / h0) * fs[i] + s * s / (h0 * h1) * fs[i + 1] + (2.0 - h0 / h1) * fs[i + 2]);
        i += 2;
    }
    if i + 1 < m {
        let (h0, h1) = (ts[m - 2] - ts[m - 3], ts[m - 1] - ts[m - 2]);
        let w0 = -h1.powi(3) / (6.0 * h0 * (h0 + h1));
        let w1 = h1 * (h1 + 3.0 * h0) / (6.0 * h0);
        let w2 = h1 * (2.0 * h1 + 3.0 * h0) / (6.0 * (h0 + h1));
        total += w0 * fs[m - 3] + w1 * fs[m - 2] + w2 * fs[m - 1];
    }
    total
}

/// `∫ f(γ(t)) dt` over a boundary-to-boundary path.
pub fn forward_xray(field: &ScalarField, path: &GeodesicPath) -> Result<XRayIntegral> {
    if path.exit.is_none() {
        return Err(Error::IncompletePath);
    }
    let ts: Vec<f64> = path.samples.iter().map(|s| s.t).collect();
    let fs: Vec<f64> = path.samples.iter().map(|s| field.eval(&s.x)).collect();
    let value = simpson(&ts, &fs);
    let last = ts.len() - 1;
    let coarse: Vec<usize> = (0..last).step_by(2).chain(std::iter::once(last)).collect();
    let tc: Vec<f64> = coarse.iter().map(|&i| ts[i]).collect();
    let fc: Vec<f64> = coarse.iter().map(|&i| fs[i]).collect();
    Ok(XRayIntegral {
        value,
        error: (value - simpson(&tc, &fc)).abs(),
    })
}

/// Rays leaving `points` equally spaced points of the outer unit circle at
/// `angles` takeoff angles in `(−π/2, π/2)` from the inward normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fan {
    pub points: usize,
    pub angles: usize,
}

impl Fan {
    pub fn len(&self) -> usize {
        self.points * self.angles
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(boundary point, takeoff angle, Euclidean direction)` per member.
    pub fn members(&self) -> Vec<([f64; 2], f64, [f64; 2])> {
        use std::f64::consts::PI;
        let mut out = Vec::with_capacity(self.len());
        for k in 0..self.points {
            let beta = 2.0 * PI * k as f64 / self.points as f64;
            let z = [beta.cos(), beta.sin()];
            for j in 0..self.angles {
                let alpha = -PI / 2.0 + PI * (j as f64 + 0.5) / self.angles as f64;
                let d = [-(beta + alpha).cos(), -(beta + alpha).sin()];
                out.push((z, alpha, d));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RayFlag {
    /// Left through the outer boundary.
    Returned,
    /// Hit the inner boundary of the annulus.
    InnerBoundary,
    /// No exit within the step cap, or the integration failed.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XRayRow {
    pub boundary_point: Vec<f64>,
    pub angle: f64,
    /// F-unit initial vector.
    pub direction: Vec<f64>,
    pub flag: RayFlag,
    /// One entry per input field; empty for flagged rays.
    pub integrals: Vec<f64>,
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct XRayDataset {
    pub rows: Vec<XRayRow>,
}

impl XRayDataset {
    pub fn returned(&self) -> impl Iterator<Item = &XRayRow> {
        self.rows.iter().filter(|r| r.flag == RayFlag::Returned)
    }

    /// Rows `bx1,bx2,angle,integral,flag` for field `index`; flagged rays
    /// carry an empty integral.
    pub fn to_csv(&self, index: usize) -> String {
        let mut out = String::from("bx1,bx2,angle,integral,flag\n");
        for r in &self.rows {
            let value = r.integrals.get(index).map(|v| v.to_string()).unwrap_or_default();
            let flag = match r.flag {
                RayFlag::Returned => "returned",
                RayFlag::InnerBoundary => "inner_boundary",
                RayFlag::Failed => "failed",
            };
            let _ = writeln!(out, "{},{},{},{},{}", r.boundary_point[0], r.boundary_point[1], r.angle, value, flag);
        }
        out
    }
}

/// Traces every fan member and integrates each field along the rays that
/// return to the outer boundary.
pub fn xray_dataset(f: &QpFinsler, fan: &Fan, fields: &[ScalarField], opts: &GeodesicOptions) -> Result<XRayDataset> {
    if f.dim() != 2 {
        return Err(Error::UnsupportedDimension(f.dim()));
    }
    let Domain::Annulus { inner_radius, .. } = *f.field().domain() else {
        return Err(Error::InvalidInput("fans are defined on the annulus".into()));
    };
    let rows = fan
        .members()
        .into_par_iter()
        .map(|(z, angle, d)| {
            let mut row = XRayRow {
                boundary_point: z.to_vec(),
                angle,
                direction: d.to_vec(),
                flag: RayFlag::Failed,
                integrals: Vec::new(),
                errors: Vec::new(),
            };
            let Ok(speed) = f.finsler(&z, &d) else { return row };
            row.direction = d.iter().map(|v| v / speed).collect();
            let Ok(path) = integrate_geodesic(f, &z, &row.direction, opts) else { return row };
            let Some(exit) = &path.exit else { return row };
            let r = exit.point.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (r - inner_radius).abs() < (r - 1.0).abs() {
                row.flag = RayFlag::InnerBoundary;
                return row;
            }
            for field in fields {
                match forward_xray(field, &path) {
                    Ok(v) => {
                        row.integrals.push(v.value);
                        row.errors.push(v.error);
                    }
                    Err(_) => return row,
                }
            }
            row.flag = RayFlag::Returned;
            row
        })
        .collect();
    Ok(XRayDataset { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InjectivityReport {
    pub rays: usize,
    pub flagged: usize,
    pub basis_size: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub cond: f64,
    /// `σ_min / σ_max` below `1e-10`.
    pub rank_deficient: bool,
    pub true_coefficients: Vec<f64>,
    pub recovered_coefficients: Vec<f64>,
    pub recovery_rel_err: f64,
}

/// Sum of `coefficients[k] · basis[k]` as a single field, when all basis
/// elements are radial polynomials.
fn radial_combination(basis: &[ScalarField], coefficients: &[f64]) -> Option<ScalarField> {
    let mut sum: Vec<f64> = Vec::new();
    for (b, &w) in basis.iter().zip(coefficients) {
        let a = match b {
            ScalarField::Constant { value } => vec![*value],
            ScalarField::RadialPolynomial { coefficients } => coefficients.clone(),
            ScalarField::Separable { .. } => return None,
        };
        if sum.len() < a.len() {
            sum.resize(a.len(), 0.0);
        }
        for (s, v) in sum.iter_mut().zip(a) {
            *s += w * v;
        }
    }
    Some(ScalarField::RadialPolynomial { coefficients: sum })
}

/// Builds `A[ray, k] = I(basis_k)(ray)`, forward-maps the combination with
/// weights `coefficients` and recovers the weights by least squares.
pub fn desk_injectivity_experiment(
    f: &QpFinsler,
    basis: &[ScalarField],
    coefficients: &[f64],
    fan: &Fan,
    opts: &GeodesicOptions,
) -> Result<InjectivityReport> {
    if basis.is_empty() || basis.iter().any(ScalarField::is_zero) {
        return Err(Error::InvalidInput("basis elements must be nonzero".into()));
    }
    if coefficients.len() != basis.len() {
        return Err(Error::DimensionMismatch { expected: basis.len(), got: coefficients.len() });
    }
    if 4 * basis.len() > fan.len() {
        return Err(Error::InvalidInput(format!("basis of {} needs a fan of at least {}", basis.len(), 4 * basis.len())));
    }
    let mut fields = basis.to_vec();
    let combined = radial_combination(basis, coefficients);
    if let Some(c) = &combined {
        fields.push(c.clone());
    }
    let data = xray_dataset(f, fan, &fields, opts)?;
    let rows: Vec<&XRayRow> = data.returned().collect();
    let m = basis.len();
    let a = DMatrix::from_fn(rows.len(), m, |i, k| rows[i].integrals[k]);
    let b = match combined {
        Some(_) => DVector::from_fn(rows.len(), |i, _| rows[i].integrals[m]),
        None => &a * DVector::from_column_slice(coefficients),
    };
    let svd = a.svd(true, true);
    let sigma_max = svd.singular_values.max();
    let sigma_min = if rows.len() >= m { svd.singular_values.min() } else { 0.0 };
    let recovered = svd.solve(&b, 1e-12 * sigma_max).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let truth = DVector::from_column_slice(coefficients);
    let recovery_rel_err = (&recovered - &truth).norm() / truth.norm().max(f64::MIN_POSITIVE);
    Ok(InjectivityReport {
        rays: data.rows.len(),
        flagged: data.rows.len() - rows.len(),
        basis_size: m,
        sigma_min,
        sigma_max,
        cond: sigma_max / sigma_min,
        rank_deficient: sigma_min <= 1e-10 * sigma_max,
        true_coefficients: coefficients.to_vec(),
        recovered_coefficients: recovered.iter().copied().collect(),
        recovery_rel_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stiffness::StiffnessField;

    fn unit_speed_annulus() -> QpFinsler {
        QpFinsler::new(StiffnessField::isotropic_speed_polynomial(Domain::annulus(2, 0.3).unwrap(), &[1.0]).unwrap())
    }

    fn radial(a: &[f64]) -> ScalarField {
        ScalarField::RadialPolynomial { coefficients: a.to_vec() }
    }

    #[test]
    fn simpson_exact_on_cubics() {
        let ts = [0.0, 0.1, 0.25, 0.3, 0.5, 0.55];
        let fs: Vec<f64> = ts.iter().map(|t| 1.0 + t - 2.0 * t * t).collect();
        let exact = 0.55 + 0.55f64.powi(2) / 2.0 - 2.0 * 0.55f64.powi(3) / 3.0;
        assert!((simpson(&ts, &fs) - exact).abs() < 1e-14);
        let ts: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let fs: Vec<f64> = ts.iter().map(|t| t * t * t).collect();
        assert!((simpson(&ts, &fs) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn unit_field_gives_chord_length() {
        let f = unit_speed_annulus();
        let z = [0.0, 1.0];
        let d = [0.6, -0.8];
        let path = integrate_geodesic(&f, &z, &d, &GeodesicOptions::default()).unwrap();
        let exit = path.exit.clone().unwrap();
        let chord = ((exit.point[0] - z[0]).powi(2) + (exit.point[1] - z[1]).powi(2)).sqrt();
        let one = forward_xray(&ScalarField::Constant { value: 1.0 }, &path).unwrap();
        assert!((one.value - chord).abs() < 1e-9);
        assert!((chord - 1.6).abs() < 1e-8);
        assert_eq!(forward_xray(&ScalarField::Constant { value: 0.0 }, &path).unwrap().value, 0.0);
    }

    #[test]
    fn linear_in_the_field() {
        let f = unit_speed_annulus();
        let path = integrate_geodesic(&f, &[1.0, 0.0], &[-0.8, 0.6], &GeodesicOptions::default()).unwrap();
        let g = radial(&[0.3, -1.0, 2.0]);
        let h = ScalarField::Separable { radial: vec![0.0, 1.0], harmonic: 2, sine: false };
        let combo = |x: &[f64]| 2.5 * g.eval(x) - 0.75 * h.eval(x);
        let ts: Vec<f64> = path.samples.iter().map(|s| s.t).collect();
        let direct = simpson(&ts, &path.samples.iter().map(|s| combo(&s.x)).collect::<Vec<_>>());
        let split = 2.5 * forward_xray(&g, &path).unwrap().value - 0.75 * forward_xray(&h, &path).unwrap().value;
        assert!((direct - split).abs() < 1e-10);
    }

    #[test]
    fn incomplete_path_rejected() {
        let f = unit_speed_annulus();
        let opts = GeodesicOptions { max_time: Some(0.1), ..Default::default() };
        let path = integrate_geodesic(&f, &[1.0, 0.0], &[-1.0, 0.0], &opts).unwrap();
        assert!(matches!(forward_xray(&radial(&[1.0]), &path), Err(Error::IncompletePath)));
    }

    #[test]
    fn fan_counts_and_symmetry() {
        let f = unit_speed_annulus();
        let empty = xray_dataset(&f, &Fan { points: 0, angles: 16 }, &[radial(&[1.0])], &GeodesicOptions::default()).unwrap();
        assert!(empty.rows.is_empty());
        let fan = Fan { points: 4, angles: 8 };
        let data = xray_dataset(&f, &fan, &[radial(&[0.0, 0.0, 1.0])], &GeodesicOptions::default()).unwrap();
        assert_eq!(data.rows.len(), 32);
        // |sin α| < 0.3 hits the inner disc
        assert_eq!(data.rows.iter().filter(|r| r.flag == RayFlag::InnerBoundary).count(), 8);
        for k in 0..4 {
            for j in 0..4 {
                let (a, b) = (&data.rows[8 * k + j], &data.rows[8 * k + 7 - j]);
                assert!((a.angle + b.angle).abs() < 1e-15);
                assert_eq!(a.flag, b.flag);
                if a.flag == RayFlag::Returned {
                    assert!((a.integrals[0] - b.integrals[0]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn experiment_preconditions() {
        let f = unit_speed_annulus();
        let fan = Fan { points: 4, angles: 4 };
        let opts = GeodesicOptions::default();
        assert!(desk_injectivity_experiment(&f, &[radial(&[0.0])], &[1.0], &fan, &opts).is_err());
        let big: Vec<ScalarField> = (0..5).map(|k| radial(&vec![1.0; k + 1])).collect();
        assert!(desk_injectivity_experiment(&f, &big, &[1.0; 5], &fan, &opts).is_err());
    }

    #[test]
    fn duplicated_basis_is_flagged() {
        let f = unit_speed_annulus();
        let fan = Fan { points: 8, angles: 4 };
        let basis = [radial(&[1.0]), radial(&[0.0, 1.0]), radial(&[0.0, 1.0])];
        let rep = desk_injectivity_experiment(&f, &basis, &[1.0, 0.5, 0.5], &fan, &GeodesicOptions::default()).unwrap();
        assert!(rep.rank_deficient);
    }

    #[test]
    fn small_fan_recovers_radial_weights() {
        let f = unit_speed_annulus();
        let fan = Fan { points: 8, angles: 8 };
        let basis = [radial(&[1.0]), radial(&[0.0, 1.0]), radial(&[0.0, 0.0, 1.0])];
        let rep = desk_injectivity_experiment(&f, &basis, &[0.7, -1.3, 2.1], &fan, &GeodesicOptions::default()).unwrap();
        assert!(!rep.rank_deficient);
        assert!(rep.sigma_min > 0.0);
        assert!(rep.recovery_rel_err < 1e-3, "{rep:?}");
    }
}
