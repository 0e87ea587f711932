use num_traits::One;

use super::poly::MultiPoly;
use crate::error::Result;
use crate::scalar::Rational;

/// Pseudo-remainder `lc(b)^(deg a - deg b + 1) a mod b` in variable `var`.
pub fn pseudo_remainder(a: &MultiPoly, b: &MultiPoly, var: usize) -> MultiPoly {
    let db = b.degree_in(var);
    let lcb = b.lc_in(var);
    let mut r = a.clone();
    let mut e = (a.degree_in(var) + 1).saturating_sub(db);
    while !r.is_zero() && r.degree_in(var) >= db {
        let dr = r.degree_in(var);
        let s = r.lc_in(var).mul_var_pow(var, dr - db);
        r = &(&lcb * &r) - &(&s * b);
        e = e.saturating_sub(1);
    }
    &lcb.pow(e) * &r
}

fn first_active_var(a: &MultiPoly, b: &MultiPoly) -> Option<usize> {
    (0..a.nvars()).find(|&i| a.degree_in(i) > 0 || b.degree_in(i) > 0)
}

/// Content of `f` with respect to `var`: the gcd of its coefficients.
pub fn content_in(f: &MultiPoly, var: usize) -> MultiPoly {
    let mut g = f.same_shape_zero();
    for c in f.coeffs_in(var) {
        g = gcd(&g, &c);
        if g.is_constant() && !g.is_zero() {
            break;
        }
    }
    g
}

/// Last nonzero element of the subresultant remainder sequence in `var`.
fn subresultant_last(a: &MultiPoly, b: &MultiPoly, var: usize) -> MultiPoly {
    let (mut a, mut b) = if a.degree_in(var) >= b.degree_in(var) {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    };
    let mut g = a.same_shape_constant(Rational::one());
    let mut h = g.clone();
    loop {
        let delta = a.degree_in(var) - b.degree_in(var);
        let r = pseudo_remainder(&a, &b, var);
        if r.is_zero() || r.degree_in(var) == 0 {
            return if r.is_zero() { b } else { r };
        }
        let divisor = &g * &h.pow(delta);
        a = b;
        b = r.exact_div(&divisor).expect("subresultant division is exact");
        g = a.lc_in(var);
        h = match delta {
            0 => h,
            1 => g.clone(),
            d => g.pow(d).exact_div(&h.pow(d - 1)).expect("subresultant division is exact"),
        };
    }
}

/// Greatest common divisor over the rationals, normalized to integer
/// content one with a positive leading coefficient. `gcd(0, 0) = 0`.
pub fn gcd(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    if a.is_zero() {
        return b.normalized();
    }
    if b.is_zero() {
        return a.normalized();
    }
    if a.is_constant() || b.is_constant() {
        return a.same_shape_constant(Rational::one());
    }
    let var = first_active_var(a, b).expect("non-constant input");
    if a.degree_in(var) == 0 {
        return gcd(a, &content_in(b, var));
    }
    if b.degree_in(var) == 0 {
        return gcd(&content_in(a, var), b);
    }
    let ca = content_in(a, var);
    let cb = content_in(b, var);
    let c = gcd(&ca, &cb);
    let pa = a.exact_div(&ca).expect("content divides");
    let pb = b.exact_div(&cb).expect("content divides");
    let last = subresultant_last(&pa, &pb, var);
    let g = if last.degree_in(var) == 0 {
        a.same_shape_constant(Rational::one())
    } else {
        last.exact_div(&content_in(&last, var)).expect("content divides")
    };
    (&c * &g).normalized()
}

/// `f / gcd(f, ∂f/∂x_1, ..., ∂f/∂x_n)`: the radical of a nonzero polynomial.
pub fn squarefree_part(f: &MultiPoly) -> Result<MultiPoly> {
    if f.is_zero() {
        return Err(crate::Error::ZeroPolynomial);
    }
    let mut g = f.clone();
    for d in f.gradient() {
        g = gcd(&g, &d);
        if g.is_constant() {
            break;
        }
    }
    Ok(f.exact_div(&g)?.normalized())
}

pub fn is_squarefree(f: &MultiPoly) -> Result<bool> {
    if f.is_zero() {
        return Err(crate::Error::ZeroPolynomial);
    }
    let mut g = f.clone();
    for d in f.gradient() {
        g = gcd(&g, &d);
        if g.is_constant() {
            return Ok(true);
        }
    }
    Ok(g.is_constant())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> MultiPoly {
        MultiPoly::parse(s, &["x", "y", "z"]).unwrap()
    }

    #[test]
    fn univariate_gcd() {
        assert_eq!(gcd(&p("x^2 - 1"), &p("x^2 - 2 x + 1")), p("x - 1"));
        assert_eq!(gcd(&p("x^2 + 1"), &p("x - 3")), p("1"));
    }

    #[test]
    fn multivariate_gcd() {
        let common = p("x y - z + 2");
        let a = &common * &p("x + y^2");
        let b = &common * &p("3 z - x");
        assert_eq!(gcd(&a, &b), common);
    }

    #[test]
    fn gcd_with_content() {
        let a = p("2 y x^2 - 2 y");
        let b = p("4 y^2 x - 4 y^2");
        assert_eq!(gcd(&a, &b), p("x y - y"));
    }

    #[test]
    fn radical_examples() {
        assert_eq!(squarefree_part(&p("x^2 y")).unwrap(), p("x y"));
        let f = &p("x - y").pow(3) * &p("z + 1");
        assert_eq!(squarefree_part(&f).unwrap(), (&p("x - y") * &p("z + 1")).normalized());
        assert!(is_squarefree(&p("x^2 + y^2 - 1")).unwrap());
        assert!(!is_squarefree(&p("x^2 y")).unwrap());
        assert!(squarefree_part(&p("0")).is_err());
    }

    #[test]
    fn isotropic_shape_radical() {
        // (2|p|^2 - 1)(|p|^2 - 1)^2 over three variables
        let s = p("x^2 + y^2 + z^2");
        let one = p("1");
        let f = &(&s.scale(&crate::scalar::rat(2, 1)) - &one) * &(&s - &one).pow(2);
        let expect = (&(&s.scale(&crate::scalar::rat(2, 1)) - &one) * &(&s - &one)).normalized();
        assert_eq!(squarefree_part(&f).unwrap(), expect);
    }

    fn small_poly() -> impl Strategy<Value = MultiPoly> {
        proptest::collection::vec(((0u32..3, 0u32..3), -4i64..5), 1..5).prop_map(|ts| {
            MultiPoly::from_terms(
                &["x", "y", "z"],
                ts.into_iter()
                    .map(|((a, b), c)| (vec![a, b, 0], Rational::from_integer(c.into()))),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn gcd_divides_both(a in small_poly(), b in small_poly(), c in small_poly()) {
            prop_assume!(!a.is_zero() && !b.is_zero() && !c.is_zero());
            let fa = &a * &c;
            let fb = &b * &c;
            let g = gcd(&fa, &fb);
            prop_assert!(fa.exact_div(&g).is_ok());
            prop_assert!(fb.exact_div(&g).is_ok());
            prop_assert!(g.exact_div(&c.normalized()).is_ok());
        }

        #[test]
        fn radical_is_idempotent(a in small_poly(), b in small_poly()) {
            prop_assume!(!a.is_zero() && !b.is_zero());
            let f = &(&a * &a) * &b;
            let r = squarefree_part(&f).unwrap();
            prop_assert!(f.exact_div(&r).is_ok());
            prop_assert_eq!(squarefree_part(&r).unwrap(), r);
        }
    }
}
