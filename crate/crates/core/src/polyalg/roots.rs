use num_traits::{One, Signed, ToPrimitive, Zero};

use super::gcd::squarefree_part;
use super::poly::MultiPoly;
use crate::error::{Error, Result};
use crate::scalar::Rational;

/// A real root isolated in `(lo, hi]`, refined to `approx`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealRoot {
    pub lo: Rational,
    pub hi: Rational,
    pub approx: f64,
}

type Dense = Vec<Rational>;

fn trim(mut p: Dense) -> Dense {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn eval(p: &Dense, x: &Rational) -> Rational {
    p.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
}

fn derivative(p: &Dense) -> Dense {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * Rational::from_integer(k.into()))
        .collect()
}

fn remainder(a: &Dense, b: &Dense) -> Dense {
    let mut r = a.clone();
    let db = b.len() - 1;
    let lb = b[db].clone();
    while r.len() > db && !r.is_empty() {
        let k = r.len() - 1 - db;
        let q = r.last().unwrap().clone() / &lb;
        for (i, c) in b.iter().enumerate() {
            r[i + k] = &r[i + k] - &q * c;
        }
        r = trim(r);
    }
    r
}

fn sturm_chain(p: &Dense) -> Vec<Dense> {
    let mut chain = vec![p.clone(), derivative(p)];
    loop {
        let n = chain.len();
        if chain[n - 1].len() <= 1 {
            break;
        }
        let r = remainder(&chain[n - 2], &chain[n - 1]);
        if r.is_empty() {
            break;
        }
        chain.push(r.into_iter().map(|c| -c).collect());
    }
    chain
}

fn sign_changes(chain: &[Dense], x: &Rational) -> usize {
    let signs: Vec<bool> = chain
        .iter()
        .map(|p| eval(p, x))
        .filter(|v| !v.is_zero())
        .map(|v| v.is_positive())
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

fn to_dense(f: &MultiPoly, var: usize) -> Result<Dense> {
    if (0..f.nvars()).any(|i| i != var && f.degree_in(i) > 0) {
        return Err(Error::InvalidInput("root isolation needs a univariate polynomial".into()));
    }
    Ok(f.coeffs_in(var)
        .into_iter()
        .map(|c| c.constant_value().unwrap_or_else(Rational::zero))
        .collect())
}

/// Distinct real roots of a univariate polynomial, in increasing order,
/// isolated with a Sturm sequence and bisected until the bracket is
/// narrower than `width`.
pub fn real_roots(f: &MultiPoly, var: &str, width: f64) -> Result<Vec<RealRoot>> {
    let v = f.var_index(var)?;
    if f.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let p = trim(to_dense(&squarefree_part(f)?, v)?);
    if p.len() <= 1 {
        return Ok(Vec::new());
    }
    let chain = sturm_chain(&p);
    let lead = p.last().unwrap().abs();
    let bound = Rational::one()
        + p[..p.len() - 1]
            .iter()
            .map(|c| c.abs() / &lead)
            .fold(Rational::zero(), |a, b| if b > a { b } else { a });
    let width = Rational::from_float(width.max(1e-300)).unwrap_or_else(|| Rational::new(1.into(), 1_000_000_000_000u64.into()));
    let two = Rational::from_integer(2.into());

    let mut out = Vec::new();
    let mut stack = vec![(-bound.clone(), bound)];
    while let Some((lo, hi)) = stack.pop() {
        let count = sign_changes(&chain, &lo) - sign_changes(&chain, &hi);
        if count == 0 {
            continue;
        }
        if count == 1 {
            let (mut lo, mut hi) = (lo, hi);
            while &hi - &lo > width {
                let mid = (&lo + &hi) / &two;
                if eval(&p, &mid).is_zero() {
                    lo = mid.clone() - (&hi - &mid) / Rational::from_integer(1024.into());
                    hi = mid;
                    break;
                }
                if sign_changes(&chain, &lo) - sign_changes(&chain, &mid) == 1 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let approx = if eval(&p, &hi).is_zero() {
                hi.to_f64().unwrap_or(f64::NAN)
            } else {
                ((&lo + &hi) / &two).to_f64().unwrap_or(f64::NAN)
            };
            out.push(RealRoot { lo, hi, approx });
            continue;
        }
        let mid = (&lo + &hi) / &two;
        stack.push((lo, mid.clone()));
        stack.push((mid, hi));
    }
    out.sort_by(|a, b| a.lo.cmp(&b.lo));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roots(s: &str) -> Vec<f64> {
        let f = MultiPoly::parse(s, &["t"]).unwrap();
        real_roots(&f, "t", 1e-14).unwrap().into_iter().map(|r| r.approx).collect()
    }

    #[test]
    fn isolates_simple_roots() {
        let r = roots("t^3 - 2 t");
        assert_eq!(r.len(), 3);
        let s2 = 2f64.sqrt();
        for (a, b) in r.iter().zip([-s2, 0.0, s2]) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn repeated_and_rational_roots() {
        let r = roots("t^2 - 2 t + 1");
        assert_eq!(r, vec![1.0]);
        let r = roots("t^4 - 2 t^3 + t^2");
        assert_eq!(r.len(), 2);
        assert!(r[0].abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_real_roots() {
        assert!(roots("t^2 + 1").is_empty());
        assert!(roots("5").is_empty());
    }

    #[test]
    fn rejects_multivariate() {
        let f = MultiPoly::parse("t + s", &["t", "s"]).unwrap();
        assert!(real_roots(&f, "t", 1e-9).is_err());
    }
}
