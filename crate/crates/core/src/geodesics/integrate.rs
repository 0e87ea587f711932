use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finsler::QpFinsler;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeodesicOptions {
    /// RK4 step.
    pub step: f64,
    pub max_steps: usize,
    /// Position accuracy of the bisected boundary exit.
    pub exit_tolerance: f64,
    /// Stop after this much time even without an exit.
    pub max_time: Option<f64>,
    /// Evaluate `F` along the path for the energy-drift diagnostic.
    pub track_energy: bool,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            max_steps: 1_000_000,
            exit_tolerance: 1e-10,
            max_time: None,
            track_energy: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryExit {
    pub t: f64,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicPath {
    pub samples: Vec<PathSample>,
    pub step: f64,
    pub exit: Option<BoundaryExit>,
    /// `max_t |F(γ, γ̇) − F(x0, y0)|`, zero when not tracked.
    pub energy_drift: f64,
}

impl GeodesicPath {
    pub fn start(&self) -> &PathSample {
        &self.samples[0]
    }

    pub fn end(&self) -> &PathSample {
        self.samples.last().expect("paths always hold the initial sample")
    }

    /// Rows `t,x1..xn,y1..yn`.
    pub fn to_csv(&self) -> String {
        let n = self.start().x.len();
        let mut out = String::from("t");
        for i in 1..=n {
            let _ = write!(out, ",x{i}");
        }
        for i in 1..=n {
            let _ = write!(out, ",y{i}");
        }
        out.push('\n');
        for s in &self.samples {
            let _ = write!(out, "{}", s.t);
            for v in s.x.iter().chain(&s.y) {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

type State = (Vec<f64>, Vec<f64>);

fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(u, v)| u + s * v).collect()
}

/// One classical RK4 step of `ẋ = y, ẏ = −2G(x, y)`.
pub(crate) fn rk4_step(f: &QpFinsler, x: &[f64], y: &[f64], h: f64) -> Result<State> {
    let accel = |x: &[f64], y: &[f64]| -> Result<Vec<f64>> { Ok(f.spray(x, y)?.into_iter().map(|g| -2.0 * g).collect()) };
    let k1x = y.to_vec();
    let k1y = accel(x, y)?;
    let x2 = axpy(x, 0.5 * h, &k1x);
    let y2 = axpy(y, 0.5 * h, &k1y);
    let k2y = accel(&x2, &y2)?;
    let x3 = axpy(x, 0.5 * h, &y2);
    let y3 = axpy(y, 0.5 * h, &k2y);
    let k3y = accel(&x3, &y3)?;
    let x4 = axpy(x, h, &y3);
    let y4 = axpy(y, h, &k3y);
    let k4y = accel(&x4, &y4)?;
    let xn = (0..x.len()).map(|i| x[i] + h / 6.0 * (k1x[i] + 2.0 * y2[i] + 2.0 * y3[i] + y4[i])).collect();
    let yn = (0..y.len()).map(|i| y[i] + h / 6.0 * (k1y[i] + 2.0 * k2y[i] + 2.0 * k3y[i] + k4y[i])).collect();
    Ok((xn, yn))
}

/// State after time `t` using `steps` equal RK4 steps, ignoring the boundary.
pub fn flow(f: &QpFinsler, x0: &[f64], y0: &[f64], t: f64, steps: usize) -> Result<State> {
    let steps = steps.max(1);
    let h = t / steps as f64;
    let mut s = (x0.to_vec(), y0.to_vec());
    for _ in 0..steps {
        s = rk4_step(f, &s.0, &s.1, h)?;
    }
    Ok(s)
}

/// Integrates from `(x0, y0)` until the path leaves the domain (the exit
/// located by bisection on the last step) or `max_time` is reached.
pub fn integrate_geodesic(f: &QpFinsler, x0: &[f64], y0: &[f64], opts: &GeodesicOptions) -> Result<GeodesicPath> {
    let domain = f.field().domain();
    let n = f.dim();
    if x0.len() != n || y0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.len().min(y0.len()) });
    }
    if domain.level(x0) < -opts.exit_tolerance {
        return Err(Error::OutsideDomain(x0.to_vec()));
    }
    if !(opts.step > 0.0) {
        return Err(Error::InvalidInput("step must be positive".into()));
    }
    let f0 = f.finsler(x0, y0)?;
    if !(f0 > 0.0) {
        return Err(Error::ZeroVector);
    }
    let h = opts.step;
    let mut samples = vec![PathSample { t: 0.0, x: x0.to_vec(), y: y0.to_vec() }];
    let mut drift = 0.0f64;
    let mut exit = None;
    let mut t = 0.0;
    let (mut x, mut y) = (x0.to_vec(), y0.to_vec());
    for step in 0.. {
        if step >= opts.max_steps {
            return Err(Error::StepCapExceeded(opts.max_steps));
        }
        let mut dt = h;
        let mut finishing = false;
        if let Some(tmax) = opts.max_time {
            if t + dt >= tmax - 1e-12 * h {
                dt = tmax - t;
                finishing = true;
            }
            if dt <= 0.0 {
                break;
            }
        }
        let (xn, yn) = rk4_step(f, &x, &y, dt)?;
        if domain.level(&xn) < 0.0 {
            // bisect the step fraction on the boundary level
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let trial = rk4_step(f, &x, &y, mid * dt)?;
                if domain.level(&trial.0) < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if (hi - lo) * dt * y.iter().map(|v| v * v).sum::<f64>().sqrt() <= opts.exit_tolerance {
                    break;
                }
            }
            let frac = 0.5 * (lo + hi);
            let state = rk4_step(f, &x, &y, frac * dt)?;
            t += frac * dt;
            if opts.track_energy {
                drift = drift.max((f.finsler(&state.0, &state.1)? - f0).abs());
            }
            exit = Some(BoundaryExit { t, point: state.0.clone() });
            samples.push(PathSample { t, x: state.0, y: state.1 });
            break;
        }
        t = if finishing { opts.max_time.unwrap() } else { t + dt };
        x = xn;
        y = yn;
        if opts.track_energy {
            drift = drift.max((f.finsler(&x, &y)? - f0).abs());
        }
        samples.push(PathSample { t, x: x.clone(), y: y.clone() });
        if finishing {
            break;
        }
    }
    Ok(GeodesicPath {
        samples,
        step: h,
        exit,
        energy_drift: drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stiffness::{make_isotropic, Domain, StiffnessField};

    fn constant_annulus() -> QpFinsler {
        QpFinsler::new(StiffnessField::constant(Domain::annulus(2, 0.3).unwrap(), make_isotropic(2, 2.0, 1.0)).unwrap())
    }

    #[test]
    fn straight_line_exit() {
        let f = constant_annulus();
        let x0 = [0.0, 0.5];
        let y0 = [2.0, 0.0];
        let path = integrate_geodesic(&f, &x0, &y0, &GeodesicOptions::default()).unwrap();
        let exit = path.exit.as_ref().unwrap();
        let xe = 0.75f64.sqrt();
        assert!((exit.point[0] - xe).abs() < 1e-8 && (exit.point[1] - 0.5).abs() < 1e-12);
        assert!((exit.t - xe / 2.0).abs() < 1e-8);
        assert!(path.energy_drift < 1e-12);
        for s in &path.samples {
            assert!((s.x[1] - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn max_time_stops_early() {
        let f = constant_annulus();
        let opts = GeodesicOptions {
            max_time: Some(0.01),
            step: 0.003,
            ..Default::default()
        };
        let path = integrate_geodesic(&f, &[0.0, 0.5], &[1.0, 0.0], &opts).unwrap();
        assert!(path.exit.is_none());
        assert!((path.end().t - 0.01).abs() < 1e-15);
        assert_eq!(path.samples.len(), 5);
        assert!(path.to_csv().starts_with("t,x1,x2,y1,y2\n"));
    }

    #[test]
    fn rejects_bad_starts() {
        let f = constant_annulus();
        assert!(matches!(integrate_geodesic(&f, &[0.0, 0.1], &[1.0, 0.0], &GeodesicOptions::default()), Err(Error::OutsideDomain(_))));
        assert_eq!(integrate_geodesic(&f, &[0.0, 0.5], &[0.0, 0.0], &GeodesicOptions::default()), Err(Error::ZeroVector));
        let capped = GeodesicOptions { max_steps: 3, ..Default::default() };
        assert_eq!(integrate_geodesic(&f, &[0.0, 0.5], &[0.1, 0.0], &capped), Err(Error::StepCapExceeded(3)));
    }
}
