use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::tensor::{validate, StiffnessTensor};

/// Symmetric pair indices in Voigt order.
///
/// n = 2: `11, 22, 12`; n = 3: `11, 22, 33, 23, 13, 12`; other n: diagonal
/// pairs followed by `(i, j), i < j` in lexicographic order.
pub fn voigt_pairs(dim: usize) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..dim).map(|i| (i, i)).collect();
    if dim == 3 {
        pairs.extend([(1, 2), (0, 2), (0, 1)]);
    } else {
        pairs.extend((0..dim).flat_map(|i| (i + 1..dim).map(move |j| (i, j))));
    }
    pairs
}

/// Plain (unscaled) Voigt matrix `V[(ij),(kl)] = c_ijkl`, of order n(n+1)/2.
#[derive(Debug, Clone, PartialEq)]
pub struct VoigtMatrix<T = f64> {
    dim: usize,
    order: usize,
    entries: Vec<T>,
}

impl<T: Scalar> VoigtMatrix<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, r: usize, c: usize) -> &T {
        &self.entries[r * self.order + c]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.entries.chunks(self.order).map(|r| r.to_vec()).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.order).all(|r| (0..self.order).all(|c| self.get(r, c) == self.get(c, r)))
    }

    /// Exact for rationals: all pivots of symmetric elimination positive.
    pub fn is_positive_definite(&self) -> bool {
        let m = self.order;
        let mut a = self.entries.clone();
        for k in 0..m {
            let pivot = a[k * m + k].clone();
            if pivot <= T::zero() {
                return false;
            }
            for i in k + 1..m {
                let f = a[i * m + k].clone() / pivot.clone();
                if f.is_zero() {
                    continue;
                }
                for j in k..m {
                    let v = a[i * m + j].clone() - f.clone() * a[k * m + j].clone();
                    a[i * m + j] = v;
                }
            }
        }
        true
    }

    pub fn to_f64_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.order, self.order, |r, c| self.get(r, c).to_f64())
    }

    /// Reconstructs the stiffness tensor (inverse of [`voigt_matrix`]).
    pub fn to_tensor(&self) -> StiffnessTensor<T> {
        let pairs = voigt_pairs(self.dim);
        let mut t = StiffnessTensor::zeros(self.dim);
        for (r, &(i, j)) in pairs.iter().enumerate() {
            for (c, &(k, l)) in pairs.iter().enumerate() {
                let v = self.get(r, c).clone();
                for idx in [[i, j, k, l], [j, i, k, l], [i, j, l, k], [j, i, l, k]] {
                    t.set_raw(idx, v.clone());
                }
            }
        }
        t
    }
}

pub(crate) fn voigt_matrix_unchecked<T: Scalar>(c: &StiffnessTensor<T>) -> VoigtMatrix<T> {
    let pairs = voigt_pairs(c.dim());
    let order = pairs.len();
    let mut entries = Vec::with_capacity(order * order);
    for &(i, j) in &pairs {
        for &(k, l) in &pairs {
            entries.push(c.get(i, j, k, l).clone());
        }
    }
    VoigtMatrix {
        dim: c.dim(),
        order,
        entries,
    }
}

/// Voigt matrix of a tensor that satisfies the elastic symmetries.
pub fn voigt_matrix<T: Scalar>(c: &StiffnessTensor<T>) -> Result<VoigtMatrix<T>> {
    let report = validate(c);
    if let Some(&index) = report.symmetry_violations.first() {
        return Err(Error::SymmetryViolation {
            index,
            detail: "tensor lacks the elastic symmetries".into(),
        });
    }
    Ok(voigt_matrix_unchecked(c))
}
