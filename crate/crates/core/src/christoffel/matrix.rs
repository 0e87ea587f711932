use nalgebra::DMatrix;
use num_traits::One;

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigen, EigenSystem};
use crate::polyalg::MultiPoly;
use crate::scalar::{Rational, Scalar};
use crate::stiffness::{RationalTensor, StiffnessTensor};

/// `Γ_il(p) = Σ_jk c_ijkl p_j p_k` together with the covector it was built at.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelMatrix<T = f64> {
    dim: usize,
    p: Vec<T>,
    entries: Vec<T>,
}

impl<T: Scalar> ChristoffelMatrix<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn momentum(&self) -> &[T] {
        &self.p
    }

    pub fn get(&self, i: usize, l: usize) -> &T {
        &self.entries[i * self.dim + l]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, l| self.get(i, l).to_f64())
    }
}

pub fn christoffel_matrix<T: Scalar>(c: &StiffnessTensor<T>, p: &[T]) -> Result<ChristoffelMatrix<T>> {
    let n = c.dim();
    if p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.len() });
    }
    let mut entries = vec![T::zero(); n * n];
    for i in 0..n {
        for l in i..n {
            let mut s = T::zero();
            for j in 0..n {
                for k in 0..n {
                    let cijkl = c.get(i, j, k, l);
                    if !cijkl.is_zero() {
                        s = s + cijkl.clone() * p[j].clone() * p[k].clone();
                    }
                }
            }
            entries[i * n + l] = s.clone();
            entries[l * n + i] = s;
        }
    }
    Ok(ChristoffelMatrix {
        dim: n,
        p: p.to_vec(),
        entries,
    })
}

/// Variable names `p1..pn` used by every slowness polynomial.
pub fn momentum_vars(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("p{i}")).collect()
}

fn det_cofactor(m: &[Vec<MultiPoly>]) -> MultiPoly {
    match m.len() {
        1 => m[0][0].clone(),
        2 => &(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0]),
        n => {
            let mut acc = m[0][0].same_shape_zero();
            for col in 0..n {
                if m[0][col].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<MultiPoly>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, e)| e.clone()).collect())
                    .collect();
                let term = &m[0][col] * &det_cofactor(&minor);
                acc = if col % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            acc
        }
    }
}

/// `Γ(p)` as a matrix of exact quadratic forms in `p1..pn`.
pub fn symbolic_christoffel(c: &RationalTensor) -> Vec<Vec<MultiPoly>> {
    let n = c.dim();
    let names = momentum_vars(n);
    let vars: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let mut m = vec![vec![MultiPoly::zero(&vars); n]; n];
    for i in 0..n {
        for l in 0..n {
            let mut terms = Vec::new();
            for j in 0..n {
                for k in 0..n {
                    let mut e = vec![0u32; n];
                    e[j] += 1;
                    e[k] += 1;
                    terms.push((e, c.get(i, j, k, l).clone()));
                }
            }
            m[i][l] = MultiPoly::from_terms(&vars, terms);
        }
    }
    m
}

/// Exact slowness polynomial `det(Γ(p) − Id)` in `p1..pn`, for `n ∈ {2, 3}`.
pub fn slowness_polynomial(c: &RationalTensor) -> Result<MultiPoly> {
    let n = c.dim();
    if !(2..=3).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    let mut m = symbolic_christoffel(c);
    for (i, row) in m.iter_mut().enumerate() {
        let one = row[i].same_shape_constant(Rational::one());
        row[i] = &row[i] - &one;
    }
    Ok(det_cofactor(&m))
}

/// Numeric `det(Γ(p) − Id)` for any dimension.
pub fn slowness_value(c: &StiffnessTensor<f64>, p: &[f64]) -> Result<f64> {
    let g = christoffel_matrix(c, p)?.to_matrix();
    let n = g.nrows();
    Ok(crate::linalg::determinant(&(g - DMatrix::identity(n, n))))
}

/// Eigen-decomposition of `Γ(p)` with descending eigenvalues.
pub fn eigen_sorted(c: &StiffnessTensor<f64>, p: &[f64]) -> Result<EigenSystem> {
    if p.iter().all(|x| *x == 0.0) {
        return Err(Error::ZeroCovector);
    }
    Ok(jacobi_eigen(&christoffel_matrix(c, p)?.to_matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use crate::stiffness::make_isotropic;
    use proptest::prelude::*;

    #[test]
    fn isotropic_3d_on_axis() {
        let c = make_isotropic(3, 2.0, 1.0);
        let g = christoffel_matrix(&c, &[1.0, 0.0, 0.0]).unwrap().to_matrix();
        assert_eq!(g, DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0, 1.0])));
        let e = eigen_sorted(&c, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(e.eigenvalues, vec![4.0, 1.0, 1.0]);
        assert!((e.vector(0)[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_covector() {
        let c = make_isotropic(2, 2.0, 1.0);
        assert!(christoffel_matrix(&c, &[0.0, 0.0]).unwrap().to_matrix().iter().all(|x| *x == 0.0));
        assert_eq!(eigen_sorted(&c, &[0.0, 0.0]).unwrap_err(), Error::ZeroCovector);
        assert!(matches!(christoffel_matrix(&c, &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn two_d_entries_match_direct_sum() {
        let c = StiffnessTensor::<f64>::from_components(
            2,
            [([0, 0, 0, 0], 7.0), ([1, 1, 1, 1], 5.0), ([0, 0, 1, 1], 2.0), ([0, 1, 0, 1], 3.0), ([0, 0, 0, 1], 0.5), ([0, 1, 1, 1], -0.25)],
        )
        .unwrap();
        let (p1, p2) = (0.3, -1.7);
        let g = christoffel_matrix(&c, &[p1, p2]).unwrap();
        let (c1111, c2222, c1122, c1212, c1112, c1222) = (7.0, 5.0, 2.0, 3.0, 0.5, -0.25);
        let close = |a: f64, b: f64| (a - b).abs() < 1e-13;
        assert!(close(*g.get(0, 0), c1111 * p1 * p1 + 2.0 * c1112 * p1 * p2 + c1212 * p2 * p2));
        assert!(close(*g.get(0, 1), c1112 * p1 * p1 + (c1122 + c1212) * p1 * p2 + c1222 * p2 * p2));
        assert!(close(*g.get(1, 1), c1212 * p1 * p1 + 2.0 * c1222 * p1 * p2 + c2222 * p2 * p2));
    }

    #[test]
    fn isotropic_slowness_polynomials() {
        let c2 = make_isotropic(2, rat(2, 1), rat(1, 1));
        let a = MultiPoly::parse("4 p1^2 + 4 p2^2 - 1", &["p1", "p2"]).unwrap();
        let b = MultiPoly::parse("p1^2 + p2^2 - 1", &["p1", "p2"]).unwrap();
        assert_eq!(slowness_polynomial(&c2).unwrap(), &a * &b);

        let c3 = make_isotropic(3, rat(2, 1), rat(1, 1));
        let v = ["p1", "p2", "p3"];
        let a = MultiPoly::parse("4 p1^2 + 4 p2^2 + 4 p3^2 - 1", &v).unwrap();
        let b = MultiPoly::parse("p1^2 + p2^2 + p3^2 - 1", &v).unwrap();
        assert_eq!(slowness_polynomial(&c3).unwrap(), &a * &b.pow(2));
    }

    #[test]
    fn zero_tensor_slowness() {
        for n in 2..=3 {
            let z = RationalTensor::zeros(n);
            let p = slowness_polynomial(&z).unwrap();
            let expect = if n % 2 == 0 { rat(1, 1) } else { rat(-1, 1) };
            assert_eq!(p.constant_value(), Some(expect));
        }
        assert!(matches!(slowness_polynomial(&RationalTensor::zeros(4)), Err(Error::UnsupportedDimension(4))));
    }

    fn small_tensor(n: usize) -> impl Strategy<Value = RationalTensor> {
        let count = crate::stiffness::canonical_indices(n).len();
        proptest::collection::vec((-20i64..21, 1i64..5), count).prop_map(move |vals| {
            let idx = crate::stiffness::canonical_indices(n);
            RationalTensor::from_components(n, idx.into_iter().zip(vals.into_iter().map(|(a, b)| rat(a, b)))).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn quadratic_homogeneity(c in small_tensor(3), p in proptest::collection::vec(-9i64..10, 3), t in -7i64..8) {
            let p: Vec<Rational> = p.into_iter().map(|x| rat(x, 3)).collect();
            let tp: Vec<Rational> = p.iter().map(|x| x * rat(t, 2)).collect();
            let g = christoffel_matrix(&c, &p).unwrap();
            let gt = christoffel_matrix(&c, &tp).unwrap();
            for i in 0..3 {
                for l in 0..3 {
                    prop_assert_eq!(gt.get(i, l).clone(), g.get(i, l) * rat(t * t, 4));
                }
            }
        }

        #[test]
        fn polynomial_matches_numeric_determinant(c in small_tensor(3), p in proptest::collection::vec(-9i64..10, 3)) {
            let pr: Vec<Rational> = p.iter().map(|&x| rat(x, 4)).collect();
            let pf: Vec<f64> = p.iter().map(|&x| x as f64 / 4.0).collect();
            let poly = slowness_polynomial(&c).unwrap();
            let exact = poly.eval_rational(&pr).to_f64();
            let numeric = slowness_value(&c.to_f64(), &pf).unwrap();
            let scale = 1.0 + c.max_abs().powi(3) * pf.iter().map(|x| x * x).sum::<f64>().powi(3);
            prop_assert!((exact - numeric).abs() <= 1e-10 * scale, "{} vs {}", exact, numeric);
        }

        #[test]
        fn trace_and_determinant(c in small_tensor(3), p in proptest::collection::vec(-1.0f64..1.0, 3)) {
            prop_assume!(p.iter().any(|x| x.abs() > 1e-3));
            let cf = c.to_f64();
            let g = christoffel_matrix(&cf, &p).unwrap().to_matrix();
            let e = eigen_sorted(&cf, &p).unwrap();
            let scale = 1.0 + g.norm();
            prop_assert!((e.eigenvalues.iter().sum::<f64>() - g.trace()).abs() <= 1e-10 * scale);
            let prod: f64 = e.eigenvalues.iter().product();
            prop_assert!((prod - crate::linalg::determinant(&g)).abs() <= 1e-10 * scale.powi(3));
            prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn eigenvalues_scale_quadratically() {
        let c = make_isotropic(2, 2.0, 1.0);
        let e1 = eigen_sorted(&c, &[0.6, 0.8]).unwrap();
        assert!((e1.eigenvalues[0] - 4.0).abs() < 1e-14 && (e1.eigenvalues[1] - 1.0).abs() < 1e-14);
        let e2 = eigen_sorted(&c, &[1.2, 1.6]).unwrap();
        for (a, b) in e2.eigenvalues.iter().zip(&e1.eigenvalues) {
            assert!((a - 4.0 * b).abs() < 1e-13);
        }
    }
}
