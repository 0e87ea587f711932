use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deterministic unit-direction sampling: uniform angles on S¹ and a
/// Fibonacci lattice on S².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphereSampling {
    pub count: usize,
}

pub const DEFAULT_CIRCLE_SAMPLES: usize = 1024;
pub const DEFAULT_SPHERE_SAMPLES: usize = 2048;

/// A sampled direction with its angles (`phi` only on S²; `theta` is the
/// polar angle there and the polar coordinate angle on S¹).
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub theta: f64,
    pub phi: Option<f64>,
    pub unit: Vec<f64>,
}

impl SphereSampling {
    pub fn new(count: usize) -> Self {
        Self { count }
    }

    pub fn default_for(dim: usize) -> Self {
        Self::new(if dim == 2 { DEFAULT_CIRCLE_SAMPLES } else { DEFAULT_SPHERE_SAMPLES })
    }

    pub fn directions(&self, dim: usize) -> Result<Vec<Direction>> {
        if self.count < 2 * dim {
            return Err(Error::InvalidInput(format!(
                "sphere sampling needs at least {} directions in dimension {dim}, got {}",
                2 * dim,
                self.count
            )));
        }
        let n = self.count;
        match dim {
            2 => Ok((0..n)
                .map(|k| {
                    let theta = 2.0 * PI * k as f64 / n as f64;
                    circle_direction(theta)
                })
                .collect()),
            3 => {
                let golden = PI * (3.0 - 5f64.sqrt());
                Ok((0..n)
                    .map(|k| {
                        let z = 1.0 - (2 * k + 1) as f64 / n as f64;
                        let theta = z.acos();
                        let phi = (golden * k as f64).rem_euclid(2.0 * PI);
                        sphere_direction(theta, phi)
                    })
                    .collect())
            }
            d => Err(Error::UnsupportedDimension(d)),
        }
    }

    /// Typical spacing between neighbouring samples.
    pub fn spacing(&self, dim: usize) -> f64 {
        match dim {
            2 => 2.0 * PI / self.count as f64,
            _ => (4.0 * PI / self.count as f64).sqrt(),
        }
    }
}

pub fn circle_direction(theta: f64) -> Direction {
    Direction {
        theta,
        phi: None,
        unit: vec![theta.cos(), theta.sin()],
    }
}

pub fn sphere_direction(theta: f64, phi: f64) -> Direction {
    let s = theta.sin();
    Direction {
        theta,
        phi: Some(phi),
        unit: vec![s * phi.cos(), s * phi.sin(), theta.cos()],
    }
}

/// Direction from angles in the layout produced by [`SphereSampling::directions`].
pub fn direction_from_angles(theta: f64, phi: Option<f64>) -> Direction {
    match phi {
        Some(phi) => sphere_direction(theta, phi),
        None => circle_direction(theta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_and_counts() {
        for dim in [2, 3] {
            let d = SphereSampling::new(100).directions(dim).unwrap();
            assert_eq!(d.len(), 100);
            for x in &d {
                assert!((x.unit.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-14);
            }
        }
        assert!(SphereSampling::new(5).directions(3).is_err());
        assert!(SphereSampling::new(50).directions(4).is_err());
    }

    #[test]
    fn fibonacci_is_balanced() {
        let d = SphereSampling::new(2048).directions(3).unwrap();
        let mean: Vec<f64> = (0..3).map(|i| d.iter().map(|x| x.unit[i]).sum::<f64>() / 2048.0).collect();
        assert!(mean.iter().all(|m| m.abs() < 1e-3));
    }
}
