use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;
use crate::scalar::{Rational, Scalar};

/// Rank-4 stiffness tensor `c_ijkl` in `n` dimensions.
///
/// Components are stored densely (`n^4` entries, zero-based indices) so that
/// tensors violating the elastic symmetries can still be represented and
/// reported by [`validate`]. The canonical constructors fill every symmetry
/// orbit from one representative.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessTensor<T = f64> {
    dim: usize,
    data: Vec<T>,
}

pub type RationalTensor = StiffnessTensor<Rational>;

/// Canonical representative of the orbit of `(i,j,k,l)` under
/// `c_ijkl = c_jikl = c_klij` (and therefore `c_ijlk`).
pub fn canonical_index(idx: [usize; 4]) -> [usize; 4] {
    let a = (idx[0].min(idx[1]), idx[0].max(idx[1]));
    let b = (idx[2].min(idx[3]), idx[2].max(idx[3]));
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    [a.0, a.1, b.0, b.1]
}

/// All distinct index quadruples in the orbit of `idx`.
pub fn orbit(idx: [usize; 4]) -> Vec<[usize; 4]> {
    let [i, j, k, l] = idx;
    let mut out = vec![
        [i, j, k, l],
        [j, i, k, l],
        [i, j, l, k],
        [j, i, l, k],
        [k, l, i, j],
        [l, k, i, j],
        [k, l, j, i],
        [l, k, j, i],
    ];
    out.sort();
    out.dedup();
    out
}

/// Canonical representatives in ascending order; 6 for n = 2, 21 for n = 3.
pub fn canonical_indices(dim: usize) -> Vec<[usize; 4]> {
    let pairs: Vec<(usize, usize)> = (0..dim).flat_map(|i| (i..dim).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    for (a, &p) in pairs.iter().enumerate() {
        for &q in &pairs[a..] {
            out.push(canonical_index([p.0, p.1, q.0, q.1]));
        }
    }
    out.sort();
    out
}

impl<T: Scalar> StiffnessTensor<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim.pow(4)],
        }
    }

    /// Builds a tensor from one value per symmetry orbit. Keys may be any
    /// member of the orbit; conflicting values for the same orbit are an error.
    pub fn from_components<I>(dim: usize, components: I) -> Result<Self>
    where
        I: IntoIterator<Item = ([usize; 4], T)>,
    {
        if dim < 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut seen: BTreeMap<[usize; 4], T> = BTreeMap::new();
        for (idx, v) in components {
            if idx.iter().any(|&i| i >= dim) {
                return Err(Error::InvalidInput(format!("index {idx:?} out of range for dim {dim}")));
            }
            let key = canonical_index(idx);
            if let Some(prev) = seen.get(&key) {
                if *prev != v {
                    return Err(Error::SymmetryViolation {
                        index: idx,
                        detail: format!("conflicting values {prev:?} and {v:?}"),
                    });
                }
            }
            seen.insert(key, v);
        }
        let mut t = Self::zeros(dim);
        for (key, v) in seen {
            for member in orbit(key) {
                let pos = t.offset(member);
                t.data[pos] = v.clone();
            }
        }
        Ok(t)
    }

    /// Dense construction without symmetrization (row-major `i,j,k,l`).
    pub fn from_dense(dim: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != dim.pow(4) {
            return Err(Error::DimensionMismatch {
                expected: dim.pow(4),
                got: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn offset(&self, [i, j, k, l]: [usize; 4]) -> usize {
        ((i * self.dim + j) * self.dim + k) * self.dim + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> &T {
        &self.data[self.offset([i, j, k, l])]
    }

    /// Sets a single entry without touching its symmetry partners.
    pub fn set_raw(&mut self, idx: [usize; 4], v: T) {
        let pos = self.offset(idx);
        self.data[pos] = v;
    }

    /// Sets a whole orbit.
    pub fn set(&mut self, idx: [usize; 4], v: T) {
        for member in orbit(idx) {
            self.set_raw(member, v.clone());
        }
    }

    /// Canonical `(index, value)` pairs (all orbits, zeros included).
    pub fn canonical_components(&self) -> Vec<([usize; 4], T)> {
        canonical_indices(self.dim)
            .into_iter()
            .map(|idx| (idx, self.get(idx[0], idx[1], idx[2], idx[3]).clone()))
            .collect()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> StiffnessTensor<U> {
        StiffnessTensor {
            dim: self.dim,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> StiffnessTensor<f64> {
        self.map(|v| v.to_f64())
    }

    pub fn to_rational(&self) -> Result<RationalTensor> {
        let data = self
            .data
            .iter()
            .map(|v| v.to_rational().ok_or_else(|| Error::InvalidInput("non-finite component".into())))
            .collect::<Result<Vec<_>>>()?;
        Ok(StiffnessTensor { dim: self.dim, data })
    }

    pub fn scaled(&self, t: &T) -> Self {
        self.map(|v| v.clone() * t.clone())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub(crate) fn raw(&self) -> &[T] {
        &self.data
    }
}

impl StiffnessTensor<f64> {
    /// Tensor rotated by the orthogonal matrix `rot`:
    /// `c'_ijkl = R_ia R_jb R_kc R_ld c_abcd`.
    pub fn rotated(&self, rot: &DMatrix<f64>) -> Result<Self> {
        let n = self.dim;
        if rot.nrows() != n || rot.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rot.nrows(),
            });
        }
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut acc = 0.0;
                        for a in 0..n {
                            for b in 0..n {
                                for c in 0..n {
                                    for d in 0..n {
                                        acc += rot[(i, a)]
                                            * rot[(j, b)]
                                            * rot[(k, c)]
                                            * rot[(l, d)]
                                            * self.get(a, b, c, d);
                                    }
                                }
                            }
                        }
                        out.set_raw([i, j, k, l], acc);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Isotropic tensor with Lamé parameters:
/// `c_ijkl = λ δ_ij δ_kl + μ (δ_ik δ_jl + δ_il δ_jk)`.
pub fn make_isotropic<T: Scalar>(dim: usize, lambda: T, mu: T) -> StiffnessTensor<T> {
    let mut t = StiffnessTensor::zeros(dim);
    let d = |a: usize, b: usize| a == b;
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                for l in 0..dim {
                    let mut v = T::zero();
                    if d(i, j) && d(k, l) {
                        v = v + lambda.clone();
                    }
                    if d(i, k) && d(j, l) {
                        v = v + mu.clone();
                    }
                    if d(i, l) && d(j, k) {
                        v = v + mu.clone();
                    }
                    t.set_raw([i, j, k, l], v);
                }
            }
        }
    }
    t
}

/// Lamé parameters if the tensor is exactly isotropic (floats: to 1e-12 relative).
pub fn isotropic_parameters<T: Scalar>(c: &StiffnessTensor<T>) -> Option<(T, T)> {
    let lambda = c.get(0, 0, 1, 1).clone();
    let mu = c.get(0, 1, 0, 1).clone();
    let iso = make_isotropic(c.dim(), lambda.clone(), mu.clone());
    let scale = c.max_abs().max(1.0) * 1e2;
    let same = c.raw().iter().zip(iso.raw()).all(|(a, b)| a.approx_eq(b, scale));
    same.then_some((lambda, mu))
}

/// Outcome of [`validate`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidationReport {
    pub symmetric: bool,
    pub symmetry_violations: Vec<[usize; 4]>,
    /// `None` when the symmetry check failed (no Voigt matrix exists).
    pub positive_definite: Option<bool>,
    pub voigt_eigenvalues: Vec<f64>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.symmetric && self.positive_definite == Some(true)
    }
}

/// Checks both elastic symmetries and positive-definiteness of the Voigt
/// matrix. The PD verdict comes from exact pivots of symmetric Gaussian
/// elimination; eigenvalues are reported for information.
pub fn validate<T: Scalar>(c: &StiffnessTensor<T>) -> ValidationReport {
    let n = c.dim();
    let scale = c.max_abs();
    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = c.get(i, j, k, l);
                    let ok = v.approx_eq(c.get(j, i, k, l), scale) && v.approx_eq(c.get(k, l, i, j), scale);
                    if !ok {
                        violations.push([i, j, k, l]);
                    }
                }
            }
        }
    }
    let symmetric = violations.is_empty();
    if !symmetric {
        return ValidationReport {
            symmetric,
            symmetry_violations: violations,
            positive_definite: None,
            voigt_eigenvalues: Vec::new(),
        };
    }
    let voigt = super::voigt::voigt_matrix_unchecked(c);
    let pd = voigt.is_positive_definite();
    let fm = voigt.to_f64_matrix();
    let eig = jacobi_eigen(&fm);
    ValidationReport {
        symmetric,
        symmetry_violations: violations,
        positive_definite: Some(pd),
        voigt_eigenvalues: eig.eigenvalues,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn isotropic_2d_components() {
        let c = make_isotropic(2, 2.0, 1.0);
        assert_eq!(*c.get(0, 0, 0, 0), 4.0);
        assert_eq!(*c.get(1, 1, 1, 1), 4.0);
        assert_eq!(*c.get(0, 0, 1, 1), 2.0);
        assert_eq!(*c.get(0, 1, 0, 1), 1.0);
        assert_eq!(*c.get(0, 0, 0, 1), 0.0);
        assert_eq!(*c.get(0, 1, 1, 1), 0.0);
    }

    #[test]
    fn isotropic_zero_and_negative_lambda() {
        assert!(make_isotropic(3, 0.0, 0.0).is_zero());
        let c = make_isotropic(2, rat(-1, 1), rat(1, 1));
        assert_eq!(*c.get(0, 0, 0, 0), rat(1, 1));
        assert_eq!(*c.get(0, 0, 1, 1), rat(-1, 1));
        assert_eq!(*c.get(0, 1, 0, 1), rat(1, 1));
    }

    #[test]
    fn canonical_counts() {
        assert_eq!(canonical_indices(2).len(), 6);
        assert_eq!(canonical_indices(3).len(), 21);
    }

    #[test]
    fn orbits_satisfy_symmetries() {
        for idx in canonical_indices(3) {
            let orb = orbit(idx);
            for m in &orb {
                assert!(orb.contains(&[m[1], m[0], m[2], m[3]]));
                assert!(orb.contains(&[m[2], m[3], m[0], m[1]]));
                assert_eq!(canonical_index(*m), idx);
            }
        }
    }

    #[test]
    fn validate_isotropic_pd() {
        let r = validate(&make_isotropic(2, rat(2, 1), rat(1, 1)));
        assert!(r.symmetric);
        assert_eq!(r.positive_definite, Some(true));
        let ev = &r.voigt_eigenvalues;
        assert!((ev[0] - 6.0).abs() < 1e-12 && (ev[1] - 2.0).abs() < 1e-12 && (ev[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validate_semidefinite_rejected() {
        let r = validate(&make_isotropic(2, rat(-1, 1), rat(1, 1)));
        assert_eq!(r.positive_definite, Some(false));
        assert!(r.voigt_eigenvalues.iter().any(|e| e.abs() < 1e-14));
    }

    #[test]
    fn validate_flags_broken_symmetry() {
        let mut c = make_isotropic(2, rat(2, 1), rat(1, 1));
        c.set_raw([0, 0, 0, 1], rat(1, 2));
        let r = validate(&c);
        assert!(!r.symmetric);
        assert!(r.symmetry_violations.contains(&[0, 0, 0, 1]));
        assert_eq!(r.positive_definite, None);
    }

    #[test]
    fn conflicting_components_rejected() {
        let err = StiffnessTensor::from_components(2, [([0, 0, 0, 1], 1.0), ([0, 1, 0, 0], 2.0)]);
        assert!(matches!(err, Err(Error::SymmetryViolation { .. })));
    }

    #[test]
    fn rotation_by_quarter_turn_swaps_axes() {
        let c = StiffnessTensor::from_components(2, [([0, 0, 0, 0], 3.0), ([1, 1, 1, 1], 5.0), ([0, 1, 0, 1], 1.0)]).unwrap();
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let r = c.rotated(&rot).unwrap();
        assert_eq!(*r.get(0, 0, 0, 0), 5.0);
        assert_eq!(*r.get(1, 1, 1, 1), 3.0);
        assert!(validate(&r).symmetric);
    }

    #[test]
    fn isotropic_parameters_roundtrip() {
        let c = make_isotropic(3, rat(3, 2), rat(1, 3));
        assert_eq!(isotropic_parameters(&c), Some((rat(3, 2), rat(1, 3))));
        let mut d = c.clone();
        d.set([0, 0, 0, 1], rat(1, 100));
        assert_eq!(isotropic_parameters(&d), None);
    }
}
