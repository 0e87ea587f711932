use num_traits::ToPrimitive;

use super::poly::MultiPoly;

/// `f64` snapshot of a polynomial for fast repeated evaluation.
#[derive(Debug, Clone)]
pub struct CompiledPoly {
    nvars: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl CompiledPoly {
    pub fn new(p: &MultiPoly) -> Self {
        Self {
            nvars: p.nvars(),
            terms: p.terms().map(|(e, c)| (e.clone(), c.to_f64().unwrap_or(f64::NAN))).collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// Sum of absolute term values; a natural scale for rounding error.
    pub fn magnitude(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| (c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>()).abs())
            .sum()
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.abs()).fold(0.0, f64::max)
    }
}
