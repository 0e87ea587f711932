use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{qp_jet, QpFinsler};
use crate::error::{Error, Result};
use crate::stiffness::Domain;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatteryOptions {
    pub samples: usize,
    pub seed: u64,
    pub homogeneity_tol: f64,
    pub euler_tol: f64,
    pub roundtrip_tol: f64,
    pub gradient_tol: f64,
    pub isotropic_tol: f64,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self {
            samples: 200,
            seed: 0,
            homogeneity_tol: 1e-8,
            euler_tol: 1e-8,
            roundtrip_tol: 1e-8,
            gradient_tol: 1e-6,
            isotropic_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    pub worst: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport {
    pub samples: usize,
    /// Draws rejected because the qP gap was below the configured threshold.
    pub rejected: usize,
    pub checks: Vec<InvariantCheck>,
    pub pass: bool,
}

struct Worst {
    name: &'static str,
    tol: f64,
    value: f64,
}

impl Worst {
    fn new(name: &'static str, tol: f64) -> Self {
        Self { name, tol, value: 0.0 }
    }

    fn push(&mut self, v: f64) {
        // NaN counts as a failure
        self.value = if v.is_nan() { f64::INFINITY } else { self.value.max(v) };
    }

    fn finish(self) -> InvariantCheck {
        InvariantCheck {
            name: self.name.to_string(),
            worst: self.value,
            tolerance: self.tol,
            pass: self.value <= self.tol,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn random_point(rng: &mut ChaCha8Rng, domain: &Domain) -> Vec<f64> {
    let n = domain.dim();
    let (lo, hi): (Vec<f64>, Vec<f64>) = match domain {
        Domain::Box { lo, hi } => (lo.clone(), hi.clone()),
        Domain::Annulus { .. } => (vec![-1.0; n], vec![1.0; n]),
    };
    loop {
        let x: Vec<f64> = lo.iter().zip(&hi).map(|(&l, &h)| rng.gen_range(l..h)).collect();
        if domain.level(&x) > 0.0 {
            return x;
        }
    }
}

/// Checks the structural identities of the qP Finsler function at random
/// base points, covectors and scalings:
///
/// * `λ(x, tp) = t²λ(x, p)` and `F(x, ty) = tF(x, y)`;
/// * `p·∂_pλ = 2λ` and `p·y = F²` at `y = ℓ(p)`;
/// * `ℓ⁻¹(ℓ(p)) = p`;
/// * the perturbative gradient of `λ` against central differences;
/// * positive definite fundamental tensor;
/// * `F = |y|/c_P` when the field is isotropic.
pub fn invariant_battery(f: &QpFinsler, opts: &BatteryOptions) -> Result<BatteryReport> {
    let n = f.dim();
    let domain = f.field().domain();
    let isotropic = f.field().is_spherically_symmetric();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut hom = Worst::new("homogeneity", opts.homogeneity_tol);
    let mut euler = Worst::new("euler", opts.euler_tol);
    let mut round = Worst::new("legendre_roundtrip", opts.roundtrip_tol);
    let mut grad = Worst::new("eigen_gradient", opts.gradient_tol);
    let mut pd = Worst::new("fundamental_tensor_pd", 0.0);
    let mut iso = Worst::new("isotropic_speed", opts.isotropic_tol);
    let mut rejected = 0;
    let mut accepted = 0;
    while accepted < opts.samples {
        if rejected > 100 * opts.samples.max(1) {
            return Err(Error::InvalidInput("almost every draw hit a degenerate qP direction".into()));
        }
        let x = random_point(&mut rng, domain);
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let t: f64 = rng.gen_range(0.1..10.0);
        if norm(&p) < 1e-3 {
            continue;
        }
        let c = f.field().tensor_at(&x)?;
        let jet = match qp_jet(&c, &p, f.options().gap_threshold) {
            Ok(j) => j,
            Err(Error::DegenerateDirection { .. }) => {
                rejected += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        accepted += 1;
        let lam = jet.lambda;
        let tp: Vec<f64> = p.iter().map(|v| t * v).collect();
        hom.push((f.hamiltonian(&x, &tp)? - t * t * lam).abs() / (t * t * lam));
        let y = f.legendre_forward(&x, &p)?.y;
        let fy = f.finsler(&x, &y)?;
        let ty: Vec<f64> = y.iter().map(|v| t * v).collect();
        hom.push((f.finsler(&x, &ty)? - t * fy).abs() / (t * fy));

        euler.push((dot(&p, jet.gradient.as_slice()) - 2.0 * lam).abs() / lam);
        euler.push((dot(&p, &y) - fy * fy).abs() / (fy * fy));

        let back = f.legendre_inverse(&x, &y)?.p;
        let diff: Vec<f64> = back.iter().zip(&p).map(|(a, b)| a - b).collect();
        round.push(norm(&diff) / norm(&p));

        let h = 1e-5 * norm(&p);
        let mut fd = vec![0.0; n];
        for (m, slot) in fd.iter_mut().enumerate() {
            let mut a = p.clone();
            let mut b = p.clone();
            a[m] += h;
            b[m] -= h;
            *slot = (f.hamiltonian(&x, &a)? - f.hamiltonian(&x, &b)?) / (2.0 * h);
        }
        let gdiff: Vec<f64> = fd.iter().zip(jet.gradient.iter()).map(|(a, b)| a - b).collect();
        grad.push(norm(&gdiff) / jet.gradient.norm());

        let g = f.fundamental_tensor_dual(&x, &y)?;
        pd.push(if g.min_eigenvalue > 0.0 { 0.0 } else { 1.0 });

        if isotropic {
            let r = norm(&x);
            let cp = f.field().radial_p_speed(r)?;
            iso.push((fy - norm(&y) / cp).abs() / fy);
        }
    }
    let mut checks = vec![hom.finish(), euler.finish(), round.finish(), grad.finish(), pd.finish()];
    if isotropic {
        checks.push(iso.finish());
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(BatteryReport {
        samples: accepted,
        rejected,
        checks,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stiffness::{FieldKind, RadialProfile, StiffnessField, StiffnessTensor};

    #[test]
    fn isotropic_radial_passes() {
        let field = StiffnessField::isotropic_speed_polynomial(Domain::annulus(3, 0.3).unwrap(), &[1.2, -0.2]).unwrap();
        let rep = invariant_battery(&QpFinsler::new(field), &BatteryOptions { samples: 40, ..Default::default() }).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.checks.len(), 6);
    }

    #[test]
    fn perturbed_passes_and_is_seeded() {
        let mut delta = StiffnessTensor::<f64>::zeros(2);
        delta.set([0, 0, 0, 1], 0.15);
        delta.set([0, 0, 1, 1], 0.2);
        let kind = FieldKind::PerturbedIsotropic {
            lambda: RadialProfile::Polynomial(vec![2.0, 0.5]),
            mu: RadialProfile::constant(1.0),
            delta,
        };
        let f = QpFinsler::new(StiffnessField::new(Domain::annulus(2, 0.3).unwrap(), kind, 3).unwrap());
        let opts = BatteryOptions { samples: 40, seed: 3, ..Default::default() };
        let a = invariant_battery(&f, &opts).unwrap();
        assert!(a.pass, "{a:?}");
        assert_eq!(a.checks.len(), 5);
        assert_eq!(a, invariant_battery(&f, &opts).unwrap());
    }
}
