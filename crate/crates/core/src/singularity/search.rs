use nalgebra::{DMatrix, DVector};
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::christoffel::SphereSampling;
use crate::error::{Error, Result};
use crate::polyalg::{gcd, real_roots, resultant, CompiledPoly, MultiPoly};
use crate::scalar::Rational;

/// Where to look for common zeros of `P` and `∇P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SingularSearch {
    /// Two variables only: exact elimination by gcds and resultants. Curve
    /// components of the singular set are represented by their crossings
    /// with `curve_rays` lines through the origin.
    Exact2d { curve_rays: usize },
    /// Any dimension: rays from the origin sampled on `r_min..r_max`, then a
    /// Levenberg–Marquardt polish of the system `(P, ∇P) = 0`.
    Shell {
        sampling: SphereSampling,
        r_min: f64,
        r_max: f64,
        radial_steps: usize,
    },
}

impl SingularSearch {
    pub fn exact_2d() -> Self {
        SingularSearch::Exact2d { curve_rays: 64 }
    }

    pub fn shell(dim: usize) -> Self {
        SingularSearch::Shell {
            sampling: SphereSampling::default_for(dim),
            r_min: 1e-3,
            r_max: 4.0,
            radial_steps: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularPoint {
    pub point: Vec<f64>,
    /// `|P|` at the point.
    pub value: f64,
    /// `‖∇P‖` at the point.
    pub gradient_norm: f64,
}

/// Acceptance threshold on `‖(P, ∇P)‖ / max|coef|`.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// `P` and its first and second derivatives in `f64`.
pub(crate) struct Jet {
    p: CompiledPoly,
    grad: Vec<CompiledPoly>,
    hess: Vec<Vec<CompiledPoly>>,
    scale: f64,
}

impl Jet {
    pub(crate) fn new(p: &MultiPoly) -> Self {
        let g = p.gradient();
        let hess = g.iter().map(|gi| gi.gradient().iter().map(CompiledPoly::new).collect()).collect();
        Self {
            p: CompiledPoly::new(p),
            grad: g.iter().map(CompiledPoly::new).collect(),
            hess,
            scale: p.max_abs_coefficient().max(f64::MIN_POSITIVE),
        }
    }

    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        self.p.eval(x)
    }

    pub(crate) fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.grad.iter().map(|g| g.eval(x)).collect()
    }

    pub(crate) fn scale(&self) -> f64 {
        self.scale
    }

    fn residual(&self, x: &[f64]) -> DVector<f64> {
        let n = x.len();
        DVector::from_fn(n + 1, |i, _| if i == 0 { self.p.eval(x) } else { self.grad[i - 1].eval(x) })
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        DMatrix::from_fn(n + 1, n, |i, j| if i == 0 { self.grad[j].eval(x) } else { self.hess[i - 1][j].eval(x) })
    }

    pub(crate) fn normalized_residual(&self, x: &[f64]) -> f64 {
        self.residual(x).norm() / self.scale
    }

    pub(crate) fn point(&self, x: Vec<f64>) -> SingularPoint {
        let g = self.gradient(&x);
        SingularPoint {
            value: self.p.eval(&x).abs(),
            gradient_norm: g.iter().map(|v| v * v).sum::<f64>().sqrt(),
            point: x,
        }
    }

    /// Levenberg–Marquardt on `(P, ∇P) = 0`; returns the final iterate.
    fn polish(&self, x0: &[f64], iterations: usize) -> Vec<f64> {
        let mut x = DVector::from_column_slice(x0);
        let mut r = self.residual(x.as_slice());
        let mut mu = 1e-3;
        for _ in 0..iterations {
            let cost = r.norm_squared();
            if cost.sqrt() <= 1e-3 * RESIDUAL_TOL * self.scale {
                break;
            }
            let j = self.jacobian(x.as_slice());
            let jtj = j.transpose() * &j;
            let jtr = j.transpose() * &r;
            let damp = mu * jtj.diagonal().iter().fold(1e-300f64, |a, v| a.max(*v));
            let lhs = &jtj + DMatrix::identity(x.len(), x.len()) * damp;
            let Some(step) = lhs.lu().solve(&(-jtr)) else { break };
            let trial = &x + &step;
            let rt = self.residual(trial.as_slice());
            if rt.norm_squared() < cost {
                x = trial;
                r = rt;
                mu = (mu * 0.3).max(1e-12);
            } else {
                mu *= 10.0;
                if mu > 1e12 {
                    break;
                }
            }
        }
        x.as_slice().to_vec()
    }
}

fn dedupe(points: Vec<SingularPoint>) -> Vec<SingularPoint> {
    let mut out: Vec<SingularPoint> = Vec::new();
    for p in points {
        let scale = 1.0 + p.point.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dup = out.iter().any(|q| {
            q.point.iter().zip(&p.point).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() < 1e-7 * scale
        });
        if !dup {
            out.push(p);
        }
    }
    out.sort_by(|a, b| a.point.partial_cmp(&b.point).unwrap_or(std::cmp::Ordering::Equal));
    out
}

/// Common zeros of `P` and `∇P`, located by the chosen search.
pub fn scheme_singular_points(p: &MultiPoly, search: SingularSearch) -> Result<Vec<SingularPoint>> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if p.is_constant() {
        return Ok(Vec::new());
    }
    match search {
        SingularSearch::Exact2d { curve_rays } => exact_2d(p, curve_rays),
        SingularSearch::Shell {
            sampling,
            r_min,
            r_max,
            radial_steps,
        } => shell(p, sampling, r_min, r_max, radial_steps),
    }
}

fn shell(p: &MultiPoly, sampling: SphereSampling, r_min: f64, r_max: f64, steps: usize) -> Result<Vec<SingularPoint>> {
    if !(r_min >= 0.0 && r_max > r_min && steps >= 2) {
        return Err(Error::InvalidInput("shell search needs 0 ≤ r_min < r_max and at least 2 radial steps".into()));
    }
    let jet = Jet::new(p);
    let dirs = sampling.directions(p.nvars())?;
    let found: Vec<Vec<SingularPoint>> = dirs
        .par_iter()
        .map(|d| {
            let radii: Vec<f64> = (0..=steps).map(|k| r_min + (r_max - r_min) * k as f64 / steps as f64).collect();
            let at = |r: f64| -> Vec<f64> { d.unit.iter().map(|u| u * r).collect() };
            let vals: Vec<f64> = radii.iter().map(|&r| jet.value(&at(r))).collect();
            let mut starts = Vec::new();
            for k in 0..=steps {
                let v = vals[k].abs();
                let left = if k > 0 { vals[k - 1].abs() } else { f64::INFINITY };
                let right = if k < steps { vals[k + 1].abs() } else { f64::INFINITY };
                if v <= left && v <= right {
                    starts.push(radii[k]);
                }
                if k < steps && vals[k] * vals[k + 1] < 0.0 {
                    starts.push(0.5 * (radii[k] + radii[k + 1]));
                }
            }
            let mut local = Vec::new();
            for r in starts {
                let x = jet.polish(&at(r), 60);
                if jet.normalized_residual(&x) < RESIDUAL_TOL {
                    local.push(jet.point(x));
                }
            }
            dedupe(local)
        })
        .collect();
    Ok(dedupe(found.into_iter().flatten().collect()))
}

/// Restriction of a bivariate polynomial to the line `r ↦ r u`.
fn restrict_to_line(h: &MultiPoly, u: &[Rational; 2]) -> MultiPoly {
    MultiPoly::from_terms(
        &["r"],
        h.terms().map(|(e, c)| {
            let coef = c * num_traits::pow(u[0].clone(), e[0] as usize) * num_traits::pow(u[1].clone(), e[1] as usize);
            (vec![e[0] + e[1]], coef)
        }),
    )
}

/// Real zeros of `h` on `rays` lines through the origin with rational
/// directions `((1 − t²), 2t)/(1 + t²)`.
fn curve_points(h: &MultiPoly, rays: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for k in 0..rays.max(1) {
        let angle = std::f64::consts::PI * k as f64 / rays.max(1) as f64;
        let t = Rational::from_float((angle / 2.0).tan()).unwrap_or_else(Rational::zero);
        let t = Rational::new((t * Rational::from_integer((1u64 << 20).into())).round().to_integer(), (1u64 << 20).into());
        let one = Rational::from_integer(1.into());
        let den = &one + &t * &t;
        let u = [(&one - &t * &t) / &den, (Rational::from_integer(2.into()) * &t) / &den];
        let line = restrict_to_line(h, &u);
        if line.is_zero() {
            // the whole line lies in the curve; represent it by the origin
            out.push(vec![0.0, 0.0]);
            continue;
        }
        if line.is_constant() {
            continue;
        }
        let (u0, u1) = (u[0].to_f64().unwrap_or(0.0), u[1].to_f64().unwrap_or(0.0));
        for root in real_roots(&line, "r", 1e-15)? {
            out.push(vec![root.approx * u0, root.approx * u1]);
        }
    }
    Ok(out)
}

fn univariate_roots(f: &MultiPoly, var: &str) -> Result<Vec<f64>> {
    if f.is_constant() {
        return Ok(Vec::new());
    }
    Ok(real_roots(f, var, 1e-15)?.into_iter().map(|r| r.approx).collect())
}

/// Real roots in the kept variable after eliminating `elim` from `{f, g}`.
fn projected_roots(f: &MultiPoly, g: &MultiPoly, elim: usize) -> Result<Vec<f64>> {
    let names = f.vars();
    let keep = names[1 - elim];
    if f.degree_in(elim) == 0 {
        return univariate_roots(f, keep);
    }
    if g.degree_in(elim) == 0 {
        return univariate_roots(g, keep);
    }
    univariate_roots(&resultant(f, g, names[elim])?, keep)
}

/// Real common zeros of bivariate polynomials without a common factor.
fn common_real_zeros(polys: &[MultiPoly]) -> Result<Vec<Vec<f64>>> {
    let polys: Vec<&MultiPoly> = polys.iter().filter(|p| !p.is_zero()).collect();
    if polys.is_empty() || polys.iter().any(|p| p.is_constant()) {
        return Ok(Vec::new());
    }
    let f = polys[0];
    let mut partner = None;
    for k in 1..=12i64 {
        let mut g = f.same_shape_zero();
        let mut w = Rational::from_integer(1.into());
        for q in &polys[1..] {
            g = &g + &q.scale(&w);
            w *= Rational::from_integer(k.into());
        }
        if !g.is_zero() && gcd(f, &g).is_constant() {
            partner = Some(g);
            break;
        }
    }
    let Some(g) = partner else {
        return Err(Error::InvalidInput("polynomials share a common factor".into()));
    };
    let xs = projected_roots(f, &g, 1)?;
    let ys = projected_roots(f, &g, 0)?;
    let compiled: Vec<CompiledPoly> = polys.iter().map(|p| CompiledPoly::new(p)).collect();
    let mut out = Vec::new();
    for &x in &xs {
        for &y in &ys {
            let pt = [x, y];
            let ok = compiled.iter().all(|c| c.eval(&pt).abs() <= 1e-8 * c.magnitude(&pt).max(f64::MIN_POSITIVE));
            if ok {
                out.push(pt.to_vec());
            }
        }
    }
    Ok(out)
}

fn exact_2d(p: &MultiPoly, curve_rays: usize) -> Result<Vec<SingularPoint>> {
    if p.nvars() != 2 {
        return Err(Error::UnsupportedDimension(p.nvars()));
    }
    let grad = p.gradient();
    let h = gcd(&gcd(p, &grad[0]), &grad[1]);
    let mut candidates = Vec::new();
    if !h.is_constant() {
        candidates.extend(curve_points(&h, curve_rays)?);
    }
    let reduced: Vec<MultiPoly> = [p, &grad[0], &grad[1]].iter().map(|q| q.exact_div(&h)).collect::<Result<_>>()?;
    candidates.extend(common_real_zeros(&reduced)?);

    let jet = Jet::new(p);
    let pts = candidates
        .into_iter()
        .map(|x| {
            let polished = jet.polish(&x, 20);
            if jet.normalized_residual(&polished) < jet.normalized_residual(&x) {
                polished
            } else {
                x
            }
        })
        .filter(|x| jet.normalized_residual(x) < RESIDUAL_TOL)
        .map(|x| jet.point(x))
        .collect();
    Ok(dedupe(pts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2(s: &str) -> MultiPoly {
        MultiPoly::parse(s, &["p1", "p2"]).unwrap()
    }

    #[test]
    fn squared_circle_is_singular_everywhere() {
        let f = p2("p1^2 + p2^2 - 1").pow(2);
        for search in [SingularSearch::exact_2d(), SingularSearch::shell(2)] {
            let pts = scheme_singular_points(&f, search).unwrap();
            assert!(pts.len() >= 64, "{search:?}: {}", pts.len());
            for q in &pts {
                let r = q.point.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((r - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn isotropic_2d_has_no_singular_points() {
        let f = &p2("4 p1^2 + 4 p2^2 - 1") * &p2("p1^2 + p2^2 - 1");
        assert!(scheme_singular_points(&f, SingularSearch::exact_2d()).unwrap().is_empty());
        assert!(scheme_singular_points(&f, SingularSearch::shell(2)).unwrap().is_empty());
    }

    #[test]
    fn node_is_found_exactly() {
        // nodal cubic y^2 = x^2 (x + 1): node at the origin
        let f = p2("p2^2 - p1^3 - p1^2");
        let pts = scheme_singular_points(&f, SingularSearch::exact_2d()).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].point.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn two_circles_touching() {
        // (x-1)^2 + y^2 = 1 and (x+1)^2 + y^2 = 1 touch at the origin
        let f = &p2("p1^2 - 2 p1 + p2^2") * &p2("p1^2 + 2 p1 + p2^2");
        let pts = scheme_singular_points(&f, SingularSearch::exact_2d()).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].point.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn shear_sphere_in_three_dimensions() {
        let v = ["p1", "p2", "p3"];
        let s = MultiPoly::parse("p1^2 + p2^2 + p3^2", &v).unwrap();
        let one = MultiPoly::one(&v);
        let f = &(&s.scale(&Rational::from_integer(4.into())) - &one) * &(&s - &one).pow(2);
        let search = SingularSearch::Shell {
            sampling: SphereSampling::new(200),
            r_min: 1e-3,
            r_max: 2.0,
            radial_steps: 200,
        };
        let pts = scheme_singular_points(&f, search).unwrap();
        assert!(pts.len() >= 150);
        for q in &pts {
            let r = q.point.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((r - 1.0).abs() < 1e-8, "radius {r}");
        }
    }

    #[test]
    fn errors() {
        assert_eq!(scheme_singular_points(&p2("0"), SingularSearch::exact_2d()), Err(Error::ZeroPolynomial));
        let f3 = MultiPoly::parse("p1 + p2 + p3", &["p1", "p2", "p3"]).unwrap();
        assert!(scheme_singular_points(&f3, SingularSearch::exact_2d()).is_err());
    }
}
