//! Small dense linear algebra: cyclic Jacobi eigensolver for symmetric
//! matrices plus a few helpers shared by the numeric modules.

use nalgebra::{DMatrix, DVector};

/// Eigen-decomposition of a real symmetric matrix with eigenvalues in
/// descending order.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the unit eigenvector for `eigenvalues[k]`.
    pub eigenvectors: DMatrix<f64>,
    /// max_k ‖A v_k − λ_k v_k‖.
    pub residual: f64,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> DVector<f64> {
        self.eigenvectors.column(k).into_owned()
    }
}

const MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi rotations. The input must be symmetric; only the upper
/// triangle is read.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> EigenSystem {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "square matrix required");
    let mut m = DMatrix::from_fn(n, n, |i, j| if i <= j { a[(i, j)] } else { a[(j, i)] });
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));

    if scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .map(|(i, j)| m[(i, j)] * m[(i, j)])
                .sum();
            if off.sqrt() <= f64::EPSILON * 1e-3 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = m[(p, q)];
                    if apq.abs() <= f64::MIN_POSITIVE {
                        continue;
                    }
                    let app = m[(p, p)];
                    let aqq = m[(q, q)];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[(k, p)];
                        let mkq = m[(k, q)];
                        m[(k, p)] = c * mkp - s * mkq;
                        m[(k, q)] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[(p, k)];
                        let mqk = m[(q, k)];
                        m[(p, k)] = c * mpk - s * mqk;
                        m[(q, k)] = s * mpk + c * mqk;
                    }
                    m[(p, q)] = 0.0;
                    m[(q, p)] = 0.0;
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    for c in 0..n {
        canonical_sign(&mut vectors, c);
    }

    let sym = DMatrix::from_fn(n, n, |i, j| if i <= j { a[(i, j)] } else { a[(j, i)] });
    let residual = (0..n)
        .map(|k| {
            let vk = vectors.column(k);
            (&sym * vk - vk * eigenvalues[k]).norm()
        })
        .fold(0.0, f64::max);

    EigenSystem {
        eigenvalues,
        eigenvectors: vectors,
        residual,
    }
}

/// First component with magnitude above 1e-12 is made positive.
fn canonical_sign(v: &mut DMatrix<f64>, col: usize) {
    let first = (0..v.nrows()).map(|r| v[(r, col)]).find(|x| x.abs() > 1e-12);
    if let Some(x) = first {
        if x < 0.0 {
            for r in 0..v.nrows() {
                v[(r, col)] = -v[(r, col)];
            }
        }
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut m = a.clone();
    let mut det = 1.0;
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| m[(i, k)].abs().total_cmp(&m[(j, k)].abs()))
            .unwrap();
        if m[(piv, k)] == 0.0 {
            return 0.0;
        }
        if piv != k {
            m.swap_rows(piv, k);
            det = -det;
        }
        det *= m[(k, k)];
        for i in k + 1..n {
            let f = m[(i, k)] / m[(k, k)];
            for j in k..n {
                m[(i, j)] -= f * m[(k, j)];
            }
        }
    }
    det
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn diagonal_matrix_sorted_descending() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 0.0, 1.0]);
        let e = jacobi_eigen(&a);
        assert_eq!(e.eigenvalues, vec![4.0, 1.0, 1.0]);
        assert_eq!(e.vector(0).as_slice(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 4.0]);
        let e = jacobi_eigen(&a);
        assert!((e.eigenvalues[0] - 6.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 2.0).abs() < 1e-14);
        assert!(e.residual < 1e-13);
    }

    #[test]
    fn determinant_matches_product() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        assert!((determinant(&a) - 18.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn jacobi_residual_and_invariants(vals in proptest::collection::vec(-10.0f64..10.0, 6)) {
            let a = DMatrix::from_row_slice(3, 3, &[
                vals[0], vals[1], vals[2],
                vals[1], vals[3], vals[4],
                vals[2], vals[4], vals[5],
            ]);
            let e = jacobi_eigen(&a);
            let scale = a.norm().max(1.0);
            prop_assert!(e.residual <= 1e-12 * scale);
            let tr: f64 = e.eigenvalues.iter().sum();
            prop_assert!((tr - a.trace()).abs() <= 1e-10 * scale);
            let prod: f64 = e.eigenvalues.iter().product();
            prop_assert!((prod - determinant(&a)).abs() <= 1e-10 * scale.powi(3));
            prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            let vtv = e.eigenvectors.transpose() * &e.eigenvectors;
            prop_assert!((vtv - DMatrix::identity(3, 3)).norm() < 1e-12);
        }
    }
}
