use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrate::{flow, integrate_geodesic, GeodesicOptions, GeodesicPath};
use crate::error::{Error, Result};
use crate::finsler::QpFinsler;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShootingOptions {
    /// RK4 steps per trial trajectory.
    pub steps: usize,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Accepted endpoint miss relative to the domain diameter.
    pub tolerance: f64,
    /// Step of the returned path.
    pub path_step: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            steps: 200,
            restarts: 8,
            max_iterations: 40,
            tolerance: 1e-7,
            path_step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShotGeodesic {
    pub path: GeodesicPath,
    pub travel_time: f64,
    pub miss: f64,
    /// Set when both endpoints coincide.
    pub degenerate: bool,
}

/// Unit direction from `n − 1` angles (polar angle on S¹; polar and
/// azimuthal angles on S²).
fn direction(angles: &[f64]) -> Vec<f64> {
    match angles.len() {
        1 => vec![angles[0].cos(), angles[0].sin()],
        _ => {
            let (t, p) = (angles[0], angles[1]);
            vec![t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]
        }
    }
}

fn angles_of(u: &[f64]) -> Vec<f64> {
    match u.len() {
        2 => vec![u[1].atan2(u[0])],
        _ => {
            let r = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            vec![(u[2] / r).clamp(-1.0, 1.0).acos(), u[1].atan2(u[0])]
        }
    }
}

/// F-unit initial vector with the given Euclidean direction.
fn unit_speed(f: &QpFinsler, x: &[f64], angles: &[f64]) -> Result<Vec<f64>> {
    let u = direction(angles);
    let s = f.finsler(x, &u)?;
    Ok(u.iter().map(|v| v / s).collect())
}

/// Geodesic from `xa` to `xb` by damped Newton shooting on the initial
/// direction and the travel time.
pub fn shoot_between(f: &QpFinsler, xa: &[f64], xb: &[f64], opts: &ShootingOptions) -> Result<ShotGeodesic> {
    let n = f.dim();
    if xa.len() != n || xb.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: xa.len().min(xb.len()) });
    }
    if n != 2 && n != 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    let domain = f.field().domain();
    for x in [xa, xb] {
        if domain.level(x) < -1e-12 {
            return Err(Error::OutsideDomain(x.to_vec()));
        }
    }
    let diam = domain.diameter();
    let gap: Vec<f64> = xb.iter().zip(xa).map(|(b, a)| b - a).collect();
    let dist = gap.iter().map(|v| v * v).sum::<f64>().sqrt();
    let path_opts = GeodesicOptions {
        step: opts.path_step,
        max_time: Some(0.0),
        ..Default::default()
    };
    if dist == 0.0 {
        let path = integrate_geodesic(f, xa, &unit_speed(f, xa, &vec![0.0; n - 1])?, &path_opts)?;
        return Ok(ShotGeodesic {
            path,
            travel_time: 0.0,
            miss: 0.0,
            degenerate: true,
        });
    }
    let target = DVector::from_column_slice(xb);
    let endpoint = |q: &DVector<f64>| -> Result<DVector<f64>> {
        let t = q[n - 1];
        if !(t > 0.0) {
            return Err(Error::InvalidInput("non-positive trial time".into()));
        }
        let y0 = unit_speed(f, xa, &q.as_slice()[..n - 1])?;
        let (x, _) = flow(f, xa, &y0, t, opts.steps)?;
        Ok(DVector::from_vec(x) - &target)
    };
    let straight_time = f.finsler(xa, &gap)?;
    let toward = angles_of(&gap);
    let mut starts = vec![toward.clone()];
    // alternate sides of the straight line, opening up to a quarter turn
    let half = opts.restarts.div_ceil(2).max(1) as f64;
    for k in 0..opts.restarts {
        let a = std::f64::consts::FRAC_PI_4 * (k / 2 + 1) as f64 / half * if k % 2 == 0 { 1.0 } else { -1.0 };
        starts.push(if n == 2 { vec![toward[0] + a] } else { vec![(toward[0] + a).clamp(0.0, std::f64::consts::PI), toward[1] + (k as f64) * std::f64::consts::PI / opts.restarts as f64] });
    }
    let mut best_miss = f64::INFINITY;
    for start in starts {
        let mut q = DVector::from_fn(n, |i, _| if i < n - 1 { start[i] } else { straight_time });
        let Ok(mut r) = endpoint(&q) else { continue };
        let mut stalls = 0;
        for _ in 0..opts.max_iterations {
            if r.norm() <= 1e-3 * opts.tolerance * diam {
                break;
            }
            let mut jac = DMatrix::zeros(n, n);
            let mut ok = true;
            for j in 0..n {
                let h = 1e-7 * if j == n - 1 { q[j].abs().max(1e-3) } else { 1.0 };
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[j] += h;
                qm[j] -= h;
                match (endpoint(&qp), endpoint(&qm)) {
                    (Ok(a), Ok(b)) => jac.set_column(j, &((a - b) / (2.0 * h))),
                    _ => ok = false,
                }
            }
            if !ok {
                break;
            }
            let Some(step) = jac.lu().solve(&(-&r)) else { break };
            let mut t = 1.0;
            let mut improved = false;
            for _ in 0..20 {
                let trial = &q + &step * t;
                if let Ok(rt) = endpoint(&trial) {
                    if rt.norm() < r.norm() {
                        stalls = if rt.norm() > 0.9 * r.norm() { stalls + 1 } else { 0 };
                        q = trial;
                        r = rt;
                        improved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !improved || stalls >= 3 {
                break;
            }
        }
        let miss = r.norm();
        best_miss = best_miss.min(miss);
        if miss <= opts.tolerance * diam {
            let time = q[n - 1];
            let y0 = unit_speed(f, xa, &q.as_slice()[..n - 1])?;
            let path = integrate_geodesic(f, xa, &y0, &GeodesicOptions { max_time: Some(time), ..path_opts })?;
            return Ok(ShotGeodesic {
                path,
                travel_time: time,
                miss,
                degenerate: false,
            });
        }
    }
    Err(Error::ShootingFailed {
        restarts: opts.restarts,
        miss: best_miss,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TravelTimeRow {
    pub source: Vec<f64>,
    pub receiver: Vec<f64>,
    /// NaN when shooting failed.
    pub time: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct TravelTimeTable {
    pub rows: Vec<TravelTimeRow>,
}

impl TravelTimeTable {
    /// Rows `sx1..,rx1..,time,converged`.
    pub fn to_csv(&self) -> String {
        let Some(first) = self.rows.first() else {
            return "time,converged\n".to_string();
        };
        let n = first.source.len();
        let mut out = String::new();
        for i in 1..=n {
            let _ = write!(out, "sx{i},");
        }
        for i in 1..=n {
            let _ = write!(out, "rx{i},");
        }
        out.push_str("time,converged\n");
        for r in &self.rows {
            for v in r.source.iter().chain(&r.receiver) {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{},{}", r.time, r.converged);
        }
        out
    }
}

/// Travel times from every source to every receiver (source-major order).
pub fn travel_time_data(f: &QpFinsler, sources: &[Vec<f64>], receivers: &[Vec<f64>], opts: &ShootingOptions) -> TravelTimeTable {
    let pairs: Vec<(&Vec<f64>, &Vec<f64>)> = sources.iter().flat_map(|s| receivers.iter().map(move |r| (s, r))).collect();
    let quick = ShootingOptions { path_step: f64::INFINITY, ..*opts };
    let rows = pairs
        .par_iter()
        .map(|(s, r)| {
            let shot = shoot_between(f, s, r, &quick);
            TravelTimeRow {
                source: s.to_vec(),
                receiver: r.to_vec(),
                time: shot.as_ref().map(|g| g.travel_time).unwrap_or(f64::NAN),
                converged: shot.is_ok(),
            }
        })
        .collect();
    TravelTimeTable { rows }
}

/// `exp⊥(s, z)`: the F-unit geodesic leaving the boundary point `z` along
/// the Legendre image of the inward conormal, evaluated at time `s`.
pub fn boundary_normal_exp(f: &QpFinsler, z: &[f64], s: f64, epsilon: f64, step: f64) -> Result<Vec<f64>> {
    if !(s >= 0.0 && s < epsilon) {
        return Err(Error::ParameterOutOfRange { s, epsilon });
    }
    let domain = f.field().domain();
    let normal = domain.inward_normal(z, 1e-9)?;
    let y = f.legendre_forward(z, &normal)?.y;
    let speed = f.finsler(z, &y)?;
    let nu: Vec<f64> = y.iter().map(|v| v / speed).collect();
    let inward: f64 = nu.iter().zip(&normal).map(|(a, b)| a * b).sum();
    if inward <= 1e-12 {
        return Err(Error::BoundaryTangency);
    }
    if s == 0.0 {
        return Ok(z.to_vec());
    }
    let steps = (s / step).ceil() as usize;
    Ok(flow(f, z, &nu, s, steps)?.0)
}
