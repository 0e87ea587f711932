use serde::Serialize;

use super::integrate::rk4_step;
use crate::error::{Error, Result};
use crate::finsler::QpFinsler;
use crate::stiffness::Domain;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HerglotzReport {
    pub radii: Vec<f64>,
    /// Fiber angles measured from the radial direction.
    pub angles: Vec<f64>,
    /// `d/dr (r / v)` on each radial interval (rows) and angle (columns).
    pub margins: Vec<Vec<f64>>,
    pub min_margin: f64,
    pub pass: bool,
}

/// Margin below which the Herglotz condition is reported as failing.
pub const HERGLOTZ_THRESHOLD: f64 = 1e-9;

/// Checks `d/dr (r / v(r, φ)) > 0` where `v(r, φ) = 1 / F(r e1, u_φ)` is the
/// qP speed in the unit direction at angle `φ` from the radial one.
pub fn herglotz_check(f: &QpFinsler, radii: &[f64], angles: usize) -> Result<HerglotzReport> {
    if !f.field().is_spherically_symmetric() {
        return Err(Error::NonRadialField);
    }
    if radii.len() < 2 || radii.windows(2).any(|w| w[1] <= w[0]) || angles == 0 {
        return Err(Error::InvalidInput("need an increasing radius grid and at least one angle".into()));
    }
    let n = f.dim();
    let phis: Vec<f64> = (0..angles).map(|k| std::f64::consts::PI * k as f64 / angles as f64).collect();
    let ratio = |r: f64, phi: f64| -> Result<f64> {
        let mut x = vec![0.0; n];
        x[0] = r;
        let mut u = vec![0.0; n];
        u[0] = phi.cos();
        u[1] = phi.sin();
        Ok(r * f.finsler(&x, &u)?)
    };
    let table = radii
        .iter()
        .map(|&r| phis.iter().map(|&phi| ratio(r, phi)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let margins: Vec<Vec<f64>> = (0..radii.len() - 1)
        .map(|i| {
            let dr = radii[i + 1] - radii[i];
            (0..angles).map(|k| (table[i + 1][k] - table[i][k]) / dr).collect()
        })
        .collect();
    let min_margin = margins.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    Ok(HerglotzReport {
        radii: radii.to_vec(),
        angles: phis,
        margins,
        min_margin,
        pass: min_margin > HERGLOTZ_THRESHOLD,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpansionOptions {
    pub step: f64,
    /// Fit times are `step · 2^k` for `k` in this range.
    pub min_power: u32,
    pub max_power: u32,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        Self {
            step: 1e-4,
            min_power: 4,
            max_power: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionFit {
    pub r0: f64,
    /// `r̈(0)`.
    pub a: f64,
    pub times: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub e3: Vec<f64>,
    /// Least-squares slopes of `log|E_k|` against `log t`.
    pub slopes: [f64; 3],
    /// Symmetric-difference estimate of `r⃛(0)`.
    pub r_jerk: f64,
    /// Symmetric-difference estimate of `θ̈(0)`.
    pub theta_accel: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// `(r, ṙ, r̈, θ)` of a state, using the spray for `ẍ`; `θ` is the angle in
/// the `x1x2`-plane.
fn polar_jet(f: &QpFinsler, x: &[f64], y: &[f64]) -> Result<[f64; 4]> {
    let accel: Vec<f64> = f.spray(x, y)?.iter().map(|g| -2.0 * g).collect();
    let r = dot(x, x).sqrt();
    let rd = dot(x, y) / r;
    let rdd = (dot(y, y) + dot(x, &accel)) / r - rd * rd / r;
    Ok([r, rd, rdd, x[1].atan2(x[0])])
}

fn slope(ts: &[f64], es: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = ts.iter().zip(es).map(|(t, e)| (t.ln(), e.abs().max(f64::MIN_POSITIVE).ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Follows the unit-speed geodesic whose lowest point is `r0 e1` in both
/// time directions and fits the expansion orders of `E1 = r̈ − a`,
/// `E2 = ṙ − a t` and `E3 = r − r0 − a t²/2`.
pub fn lowest_point_expansion_check(f: &QpFinsler, r0: f64, opts: &ExpansionOptions) -> Result<ExpansionFit> {
    if !f.field().is_spherically_symmetric() {
        return Err(Error::NonRadialField);
    }
    let n = f.dim();
    if let Domain::Annulus { inner_radius, .. } = f.field().domain() {
        if !(r0 > *inner_radius && r0 < 1.0) {
            return Err(Error::InvalidInput(format!("r0 = {r0} is not inside the annulus")));
        }
    }
    if opts.min_power >= opts.max_power || !(opts.step > 0.0) {
        return Err(Error::InvalidInput("empty fit window".into()));
    }
    let mut x0 = vec![0.0; n];
    x0[0] = r0;
    let mut e2 = vec![0.0; n];
    e2[1] = 1.0;
    let speed = f.finsler(&x0, &e2)?;
    let y0: Vec<f64> = e2.iter().map(|v| v / speed).collect();
    let h = opts.step;
    let steps = 1usize << opts.max_power;
    let window = h * steps as f64;
    let domain = f.field().domain();

    let run = |dir: f64| -> Result<Vec<[f64; 4]>> {
        let (mut x, mut y) = (x0.clone(), y0.clone());
        let mut jets = vec![polar_jet(f, &x, &y)?];
        for k in 1..=steps {
            (x, y) = rk4_step(f, &x, &y, dir * h)?;
            if domain.level(&x) < 0.0 {
                return Err(Error::EarlyExit { t_exit: k as f64 * h, window });
            }
            jets.push(polar_jet(f, &x, &y)?);
        }
        Ok(jets)
    };
    let fwd = run(1.0)?;
    let bwd = run(-1.0)?;
    let a = fwd[0][2];

    let mut times = Vec::new();
    let (mut e1, mut e2v, mut e3) = (Vec::new(), Vec::new(), Vec::new());
    for p in opts.min_power..=opts.max_power {
        let k = 1usize << p;
        let t = k as f64 * h;
        let [r, rd, rdd, _] = fwd[k];
        times.push(t);
        e1.push(rdd - a);
        e2v.push(rd - a * t);
        e3.push(r - r0 - 0.5 * a * t * t);
    }
    let slopes = [slope(&times, &e1), slope(&times, &e2v), slope(&times, &e3)];
    let r_jerk = (fwd[1][2] - bwd[1][2]) / (2.0 * h);
    let theta_accel = (fwd[1][3] - 2.0 * fwd[0][3] + bwd[1][3]) / (h * h);
    Ok(ExpansionFit {
        r0,
        a,
        times,
        e1,
        e2: e2v,
        e3,
        slopes,
        r_jerk,
        theta_accel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stiffness::{make_isotropic, StiffnessField};

    fn constant() -> QpFinsler {
        QpFinsler::new(StiffnessField::constant(Domain::annulus(2, 0.3).unwrap(), make_isotropic(2, 2.0, 1.0)).unwrap())
    }

    fn profile(speed: &[f64]) -> QpFinsler {
        QpFinsler::new(StiffnessField::isotropic_speed_polynomial(Domain::annulus(2, 0.3).unwrap(), speed).unwrap())
    }

    fn grid() -> Vec<f64> {
        (0..=28).map(|i| 0.3 + 0.025 * i as f64).collect()
    }

    #[test]
    fn herglotz_constant_margin() {
        let rep = herglotz_check(&constant(), &grid(), 8).unwrap();
        assert!(rep.pass);
        assert!((rep.min_margin - 0.5).abs() < 1e-10);
    }

    #[test]
    fn herglotz_profiles() {
        assert!(herglotz_check(&profile(&[1.2, -0.2]), &grid(), 4).unwrap().pass);
        let rep = herglotz_check(&profile(&[0.0, 1.0]), &grid(), 4).unwrap();
        assert!(!rep.pass);
        assert!(rep.min_margin.abs() < 1e-9);
    }

    #[test]
    fn herglotz_rejects_anisotropy() {
        let mut c = make_isotropic(2, 2.0, 1.0);
        c.set([0, 0, 0, 0], 5.0);
        let f = QpFinsler::new(StiffnessField::constant(Domain::annulus(2, 0.3).unwrap(), c).unwrap());
        assert!(matches!(herglotz_check(&f, &grid(), 4), Err(Error::NonRadialField)));
    }

    #[test]
    fn constant_field_chord() {
        for r0 in [0.4, 0.5, 0.7, 0.9] {
            let fit = lowest_point_expansion_check(&constant(), r0, &ExpansionOptions::default()).unwrap();
            assert!((fit.a - 4.0 / r0).abs() < 1e-10);
            for (s, want) in fit.slopes.iter().zip([2.0, 3.0, 4.0]) {
                assert!((s - want).abs() < 0.2, "r0 {r0}: {:?}", fit.slopes);
            }
            assert!(fit.r_jerk.abs() < 1e-6 && fit.theta_accel.abs() < 1e-6);
        }
    }

    #[test]
    fn radial_profile_orders() {
        let f = profile(&[1.2, -0.2]);
        let fit = lowest_point_expansion_check(&f, 0.6, &ExpansionOptions::default()).unwrap();
        assert!(fit.a > 0.0);
        for (s, want) in fit.slopes.iter().zip([2.0, 3.0, 4.0]) {
            assert!((s - want).abs() < 0.2, "{:?}", fit.slopes);
        }
        assert!(fit.r_jerk.abs() < 1e-6 && fit.theta_accel.abs() < 1e-6);
    }

    #[test]
    fn early_exit_reported() {
        let opts = ExpansionOptions { max_power: 12, ..Default::default() };
        assert!(matches!(lowest_point_expansion_check(&constant(), 0.95, &opts), Err(Error::EarlyExit { .. })));
    }
}
