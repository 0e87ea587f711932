//! Oracles shared by the integration tests. They deliberately avoid the
//! library's own geometry code.

#![allow(dead_code)]

use elastic_finsler::finsler::QpFinsler;
use elastic_finsler::stiffness::{Domain, StiffnessField};

/// P speed `1.2 − 0.2 r`, which satisfies the Herglotz condition on the annulus.
pub const HERGLOTZ_SPEED: [f64; 2] = [1.2, -0.2];

pub fn herglotz_field(dim: usize) -> QpFinsler {
    QpFinsler::new(StiffnessField::isotropic_speed_polynomial(Domain::annulus(dim, 0.3).unwrap(), &HERGLOTZ_SPEED).unwrap())
}

fn speed(r: f64) -> f64 {
    HERGLOTZ_SPEED[0] + HERGLOTZ_SPEED[1] * r
}

/// Geodesic of the conformal metric `dx² / c(r)²` for the Herglotz speed,
/// from `ẍ = −2(∇φ·ẋ)ẋ + |ẋ|²∇φ` with `φ = −ln c`, by classical RK4.
pub fn conformal_geodesic(x0: [f64; 2], y0: [f64; 2], t: f64, steps: usize) -> [f64; 2] {
    let rhs = |s: [f64; 4]| -> [f64; 4] {
        let r = (s[0] * s[0] + s[1] * s[1]).sqrt();
        let k = -HERGLOTZ_SPEED[1] / speed(r) / r;
        let grad = [k * s[0], k * s[1]];
        let gv = grad[0] * s[2] + grad[1] * s[3];
        let vv = s[2] * s[2] + s[3] * s[3];
        [s[2], s[3], -2.0 * gv * s[2] + vv * grad[0], -2.0 * gv * s[3] + vv * grad[1]]
    };
    let add = |a: [f64; 4], b: [f64; 4], w: f64| -> [f64; 4] { std::array::from_fn(|i| a[i] + w * b[i]) };
    let h = t / steps as f64;
    let mut s = [x0[0], x0[1], y0[0], y0[1]];
    for _ in 0..steps {
        let k1 = rhs(s);
        let k2 = rhs(add(s, k1, h / 2.0));
        let k3 = rhs(add(s, k2, h / 2.0));
        let k4 = rhs(add(s, k3, h));
        s = std::array::from_fn(|i| s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    [s[0], s[1]]
}

/// A unit-speed start that stays inside the annulus for more than unit time.
pub fn unit_start(f: &QpFinsler) -> (Vec<f64>, Vec<f64>) {
    let x0 = vec![-0.8, 0.4];
    let s = f.finsler(&x0, &[1.0, 0.1]).unwrap();
    (x0, vec![1.0 / s, 0.1 / s])
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

/// Smallest eigenvalue gap `|λ1 − λ2|` of the 2D Christoffel matrix over
/// the unit circle, relative to `max|c|`: a 4096-point sweep whose local
/// minima are refined by golden-section search.
///
/// `c = [c1111, c2222, c1122, c1212, c1112, c1222]`.
pub fn circle_sweep_min_gap(c: [f64; 6]) -> f64 {
    let [c1111, c2222, c1122, c1212, c1112, c1222] = c;
    let gap = |t: f64| {
        let (a, b) = (t.cos(), t.sin());
        let g11 = c1111 * a * a + 2.0 * c1112 * a * b + c1212 * b * b;
        let g22 = c1212 * a * a + 2.0 * c1222 * a * b + c2222 * b * b;
        let g12 = c1112 * a * a + (c1122 + c1212) * a * b + c1222 * b * b;
        ((g11 - g22).powi(2) + 4.0 * g12 * g12).sqrt()
    };
    let n = 4096;
    let step = std::f64::consts::PI / n as f64;
    let vals: Vec<f64> = (0..n).map(|i| gap(i as f64 * step)).collect();
    let mut best = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for i in 0..n {
        let (prev, next) = (vals[(i + n - 1) % n], vals[(i + 1) % n]);
        if vals[i] > prev || vals[i] > next {
            continue;
        }
        let (mut lo, mut hi) = ((i as f64 - 1.0) * step, (i as f64 + 1.0) * step);
        for _ in 0..200 {
            let m1 = hi - phi * (hi - lo);
            let m2 = lo + phi * (hi - lo);
            if gap(m1) < gap(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        best = best.min(gap(0.5 * (lo + hi)));
    }
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    best / scale
}
