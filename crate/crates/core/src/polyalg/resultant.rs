use num_traits::One;

use super::poly::MultiPoly;
use crate::error::{Error, Result};
use crate::scalar::Rational;

/// Determinant by fraction-free Bareiss elimination with exact division.
fn bareiss_determinant(mut m: Vec<Vec<MultiPoly>>, unit: &MultiPoly) -> MultiPoly {
    let n = m.len();
    if n == 0 {
        return unit.clone();
    }
    let mut negate = false;
    let mut prev = unit.clone();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(k, i);
                    negate = !negate;
                }
                None => return unit.same_shape_zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &(&m[i][j] * &m[k][k]) - &(&m[i][k] * &m[k][j]);
                m[i][j] = num.exact_div(&prev).expect("Bareiss division is exact");
            }
        }
        prev = m[k][k].clone();
    }
    let d = m[n - 1][n - 1].clone();
    if negate {
        -&d
    } else {
        d
    }
}

fn check_degree(f: &MultiPoly, var: usize, needed: u32) -> Result<u32> {
    if f.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let d = f.degree_in(var);
    if d < needed {
        return Err(Error::DegreeTooLow {
            var: f.vars()[var].to_string(),
            degree: d,
            needed,
        });
    }
    Ok(d)
}

/// Sylvester resultant of `f` and `g` with respect to `var`.
pub fn resultant(f: &MultiPoly, g: &MultiPoly, var: &str) -> Result<MultiPoly> {
    let v = f.var_index(var)?;
    let m = check_degree(f, v, 1)?;
    let n = check_degree(g, v, 1)?;
    sylvester_resultant(f, g, var, m, n)
}

/// Determinant of the Sylvester matrix built with formal degrees `m ≥ deg f`
/// and `n ≥ deg g` (vanishing leading coefficients are kept as zero rows).
pub fn sylvester_resultant(f: &MultiPoly, g: &MultiPoly, var: &str, m: u32, n: u32) -> Result<MultiPoly> {
    let v = f.var_index(var)?;
    if g.vars() != f.vars() {
        return Err(Error::InvalidInput("resultant operands use different variable lists".into()));
    }
    if f.is_zero() || g.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if f.degree_in(v) > m || g.degree_in(v) > n || m + n == 0 {
        return Err(Error::InvalidInput("formal degree below actual degree".into()));
    }
    let (m, n) = (m as usize, n as usize);
    let zero = f.same_shape_zero();
    let coeff = |p: &MultiPoly, k: usize| p.coeffs_in(v).get(k).cloned().unwrap_or_else(|| zero.clone());
    let size = m + n;
    let mut rows = vec![vec![zero.clone(); size]; size];
    for i in 0..n {
        for k in 0..=m {
            rows[i][i + k] = coeff(f, m - k);
        }
    }
    for i in 0..m {
        for k in 0..=n {
            rows[n + i][i + k] = coeff(g, n - k);
        }
    }
    Ok(bareiss_determinant(rows, &f.same_shape_constant(Rational::one())))
}

/// Discriminant `(-1)^(d(d-1)/2) res(f, f') / lc(f)` with respect to `var`.
pub fn discriminant(f: &MultiPoly, var: &str) -> Result<MultiPoly> {
    let v = f.var_index(var)?;
    let d = check_degree(f, v, 2)?;
    let r = resultant(f, &f.derivative(v), var)?;
    let q = r.exact_div(&f.lc_in(v))?;
    Ok(if (d * (d - 1) / 2) % 2 == 1 { -&q } else { q })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> MultiPoly {
        MultiPoly::parse(s, &["x", "y", "a", "b", "c"]).unwrap()
    }

    #[test]
    fn linear_resultants() {
        assert_eq!(resultant(&p("x - 2"), &p("x - 3"), "x").unwrap(), p("-1"));
        assert!(resultant(&p("x^2 - 1"), &p("x - 1"), "x").unwrap().is_zero());
    }

    #[test]
    fn quadratic_discriminant() {
        assert_eq!(discriminant(&p("a x^2 + b x + c"), "x").unwrap(), p("b^2 - 4 a c"));
    }

    #[test]
    fn cubic_discriminant() {
        let d = discriminant(&p("x^3 + a x + b"), "x").unwrap();
        assert_eq!(d, p("-4 a^3 - 27 b^2"));
    }

    #[test]
    fn swap_sign_rule() {
        let f = p("x^2 + y x - 3");
        let g = p("2 x^3 - y");
        let fg = resultant(&f, &g, "x").unwrap();
        let gf = resultant(&g, &f, "x").unwrap();
        assert_eq!(fg, gf);
        // odd times odd degree flips the sign
        let k = p("x^3 + y");
        let h = p("x + y");
        let kh = resultant(&k, &h, "x").unwrap();
        assert_eq!(kh, -&resultant(&h, &k, "x").unwrap());
        assert_eq!(kh, p("y^3 - y"));
    }

    #[test]
    fn vanishes_on_common_root() {
        // common root x = y
        let f = p("x^2 - y^2 + x - y");
        let g = p("x^2 - x y + 2 x - 2 y");
        assert!(resultant(&f, &g, "x").unwrap().is_zero());
    }

    #[test]
    fn rejects_low_degree() {
        assert!(matches!(resultant(&p("y"), &p("x"), "x"), Err(Error::DegreeTooLow { .. })));
        assert!(matches!(discriminant(&p("x + 1"), "x"), Err(Error::DegreeTooLow { .. })));
        assert!(matches!(discriminant(&p("x^2"), "q"), Err(Error::UnknownVariable(_))));
        assert!(matches!(resultant(&p("0"), &p("x"), "x"), Err(Error::ZeroPolynomial)));
    }
}
