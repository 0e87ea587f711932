use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::Rational;

/// Sparse multivariate polynomial with exact rational coefficients.
///
/// Terms are keyed by exponent vectors in the order of `vars`; the map order
/// (lexicographic on exponents) defines the leading term. Zero coefficients
/// are never stored.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiPoly {
    vars: Vec<String>,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl MultiPoly {
    pub fn zero(vars: &[&str]) -> Self {
        Self {
            vars: vars.iter().map(|s| s.to_string()).collect(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: &[&str], c: Rational) -> Self {
        let mut p = Self::zero(vars);
        p.add_term(vec![0; vars.len()], c);
        p
    }

    pub fn one(vars: &[&str]) -> Self {
        Self::constant(vars, Rational::one())
    }

    pub fn var(vars: &[&str], name: &str) -> Result<Self> {
        let mut p = Self::zero(vars);
        let i = p.var_index(name)?;
        let mut e = vec![0; vars.len()];
        e[i] = 1;
        p.add_term(e, Rational::one());
        Ok(p)
    }

    pub fn from_terms<I: IntoIterator<Item = (Vec<u32>, Rational)>>(vars: &[&str], terms: I) -> Self {
        let mut p = Self::zero(vars);
        for (e, c) in terms {
            assert_eq!(e.len(), vars.len(), "exponent length must match variable count");
            p.add_term(e, c);
        }
        p
    }

    pub(crate) fn same_shape_zero(&self) -> Self {
        Self {
            vars: self.vars.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub(crate) fn same_shape_constant(&self, c: Rational) -> Self {
        let mut p = self.same_shape_zero();
        p.add_term(vec![0; self.vars.len()], c);
        p
    }

    pub(crate) fn add_term(&mut self, e: Vec<u32>, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().clone() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn vars(&self) -> Vec<&str> {
        self.vars.iter().map(|s| s.as_str()).collect()
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Vec<u32>, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Nonzero constant or zero.
    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&x| x == 0))
    }

    pub fn constant_value(&self) -> Option<Rational> {
        if !self.is_constant() {
            return None;
        }
        Some(self.terms.values().next().cloned().unwrap_or_else(Rational::zero))
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|e| e[var]).max().unwrap_or(0)
    }

    /// Lexicographically leading term.
    pub fn leading_term(&self) -> Option<(&Vec<u32>, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn coefficient(&self, exps: &[u32]) -> Rational {
        self.terms.get(exps).cloned().unwrap_or_else(Rational::zero)
    }

    /// Coefficients `c_0..c_d` with `self = Σ c_k v^k`; each `c_k` is free of `v`.
    pub fn coeffs_in(&self, var: usize) -> Vec<MultiPoly> {
        let d = self.degree_in(var) as usize;
        let mut out = vec![self.same_shape_zero(); d + 1];
        for (e, c) in &self.terms {
            let k = e[var] as usize;
            let mut e2 = e.clone();
            e2[var] = 0;
            out[k].add_term(e2, c.clone());
        }
        out
    }

    /// Leading coefficient in `var` (a polynomial free of `var`).
    pub fn lc_in(&self, var: usize) -> MultiPoly {
        self.coeffs_in(var).pop().unwrap_or_else(|| self.same_shape_zero())
    }

    pub(crate) fn mul_var_pow(&self, var: usize, k: u32) -> MultiPoly {
        let mut p = self.same_shape_zero();
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            e2[var] += k;
            p.terms.insert(e2, c.clone());
        }
        p
    }

    pub fn scale(&self, c: &Rational) -> MultiPoly {
        if c.is_zero() {
            return self.same_shape_zero();
        }
        let mut p = self.clone();
        for v in p.terms.values_mut() {
            *v = v.clone() * c;
        }
        p
    }

    pub fn pow(&self, k: u32) -> MultiPoly {
        let mut acc = self.same_shape_constant(Rational::one());
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn derivative(&self, var: usize) -> MultiPoly {
        let mut p = self.same_shape_zero();
        for (e, c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[var] -= 1;
            p.add_term(e2, c.clone() * Rational::from_integer(BigInt::from(e[var])));
        }
        p
    }

    pub fn gradient(&self) -> Vec<MultiPoly> {
        (0..self.nvars()).map(|i| self.derivative(i)).collect()
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars());
        self.terms
            .iter()
            .map(|(e, c)| {
                let m: f64 = e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product();
                c.to_f64().unwrap_or(f64::NAN) * m
            })
            .sum()
    }

    pub fn eval_rational(&self, x: &[Rational]) -> Rational {
        assert_eq!(x.len(), self.nvars());
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (&k, xi) in e.iter().zip(x) {
                if k > 0 {
                    m *= num_traits::pow(xi.clone(), k as usize);
                }
            }
            acc += m;
        }
        acc
    }

    /// Substitutes `value` for variable `var`; the variable stays in the list.
    pub fn substitute(&self, var: usize, value: &Rational) -> MultiPoly {
        let mut p = self.same_shape_zero();
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            e2[var] = 0;
            p.add_term(e2, c.clone() * num_traits::pow(value.clone(), e[var] as usize));
        }
        p
    }

    /// Re-expresses the polynomial over a different variable list that
    /// contains every variable actually used.
    pub fn with_vars(&self, vars: &[&str]) -> Result<MultiPoly> {
        let map: Vec<Option<usize>> = self.vars.iter().map(|v| vars.iter().position(|w| w == v)).collect();
        let mut p = MultiPoly::zero(vars);
        for (e, c) in &self.terms {
            let mut e2 = vec![0; vars.len()];
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let j = map[i].ok_or_else(|| Error::UnknownVariable(self.vars[i].clone()))?;
                e2[j] = k;
            }
            p.add_term(e2, c.clone());
        }
        Ok(p)
    }

    /// Exact division; fails when `divisor` does not divide `self`.
    pub fn exact_div(&self, divisor: &MultiPoly) -> Result<MultiPoly> {
        let (be, bc) = divisor.leading_term().ok_or(Error::ZeroPolynomial)?;
        let (be, bc) = (be.clone(), bc.clone());
        let mut q = self.same_shape_zero();
        let mut r = self.clone();
        while let Some((re, rc)) = r.leading_term() {
            if re.iter().zip(&be).any(|(a, b)| a < b) {
                return Err(Error::InexactDivision);
            }
            let e: Vec<u32> = re.iter().zip(&be).map(|(a, b)| a - b).collect();
            let c = rc.clone() / bc.clone();
            let mut t = self.same_shape_zero();
            t.terms.insert(e, c);
            r = &r - &(&t * divisor);
            q = &q + &t;
        }
        Ok(q)
    }

    /// Scales to integer coefficients with gcd 1 and a positive leading coefficient.
    pub fn normalized(&self) -> MultiPoly {
        if self.is_zero() {
            return self.clone();
        }
        let den_lcm = self
            .terms
            .values()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let num_gcd = self
            .terms
            .values()
            .fold(BigInt::zero(), |acc, c| acc.gcd(&(c.numer() * (&den_lcm / c.denom()))));
        let mut factor = Rational::new(den_lcm, num_gcd);
        if self.leading_term().unwrap().1.is_negative() {
            factor = -factor;
        }
        self.scale(&factor)
    }

    /// Largest coefficient magnitude as `f64`.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.to_f64().unwrap_or(f64::INFINITY).abs())
            .fold(0.0, f64::max)
    }

    fn check_vars(&self, other: &MultiPoly) {
        assert_eq!(self.vars, other.vars, "polynomials over different variable lists");
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        self.check_vars(rhs);
        let mut p = self.clone();
        for (e, c) in &rhs.terms {
            p.add_term(e.clone(), c.clone());
        }
        p
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self.check_vars(rhs);
        let mut p = self.clone();
        for (e, c) in &rhs.terms {
            p.add_term(e.clone(), -c.clone());
        }
        p
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        self.check_vars(rhs);
        let mut p = self.same_shape_zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                p.add_term(e, c1.clone() * c2.clone());
            }
        }
        p
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(&-Rational::one())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for MultiPoly {
            type Output = MultiPoly;
            fn $m(self, rhs: MultiPoly) -> MultiPoly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

// Rendering: terms by descending total degree, then descending lex order;
// `coef * x^a y^b`, with unit coefficients and exponents of 1 omitted.
impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut terms: Vec<(&Vec<u32>, &Rational)> = self.terms.iter().collect();
        terms.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            db.cmp(&da).then_with(|| b.0.cmp(a.0))
        });
        for (k, (e, c)) in terms.into_iter().enumerate() {
            let neg = c.is_negative();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let a = c.abs();
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| if k == 1 { self.vars[i].clone() } else { format!("{}^{}", self.vars[i], k) })
                .collect();
            let coef = if a.is_integer() {
                a.numer().to_string()
            } else {
                format!("{}/{}", a.numer(), a.denom())
            };
            if mono.is_empty() {
                write!(f, "{coef}")?;
            } else if a.is_one() {
                write!(f, "{}", mono.join(" "))?;
            } else {
                write!(f, "{coef} * {}", mono.join(" "))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultiPoly[{}]({})", self.vars.join(","), self)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Caret,
    Star,
    Plus,
    Minus,
    Open,
    Close,
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < cs.len() {
        let c = cs[i];
        match c {
            ' ' | '\t' | '\n' => i += 1,
            '^' => {
                out.push(Tok::Caret);
                i += 1
            }
            '(' => {
                out.push(Tok::Open);
                i += 1
            }
            ')' => {
                out.push(Tok::Close);
                i += 1
            }
            '*' => {
                out.push(Tok::Star);
                i += 1
            }
            '+' => {
                out.push(Tok::Plus);
                i += 1
            }
            '-' | '\u{2212}' => {
                out.push(Tok::Minus);
                i += 1
            }
            d if d.is_ascii_digit() => {
                let start = i;
                while i < cs.len() && (cs[i].is_ascii_digit() || cs[i] == '/') {
                    i += 1;
                }
                let text: String = cs[start..i].iter().collect();
                let r = crate::scalar::parse_rational(&text).ok_or_else(|| Error::PolyParse(format!("bad number `{text}`")))?;
                out.push(Tok::Num(r));
            }
            a if a.is_alphabetic() || a == '_' => {
                let start = i;
                while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(cs[start..i].iter().collect()));
            }
            other => return Err(Error::PolyParse(format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn sum(&mut self) -> Result<MultiPoly> {
        let mut acc = MultiPoly::zero(self.vars);
        let mut first = true;
        loop {
            let negate = match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    false
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    true
                }
                _ if first => false,
                _ => return Ok(acc),
            };
            first = false;
            let term = self.product()?;
            acc = if negate { &acc - &term } else { &acc + &term };
        }
    }

    fn product(&mut self) -> Result<MultiPoly> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    if !matches!(self.peek(), Some(Tok::Num(_) | Tok::Ident(_) | Tok::Open)) {
                        return Err(Error::PolyParse("dangling `*`".into()));
                    }
                }
                Some(Tok::Num(_) | Tok::Ident(_) | Tok::Open) => {}
                _ => return Ok(acc),
            }
            acc = &acc * &self.power()?;
        }
    }

    fn power(&mut self) -> Result<MultiPoly> {
        let base = match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(r)) => MultiPoly::constant(self.vars, r),
            Some(Tok::Ident(name)) => MultiPoly::var(self.vars, &name)?,
            Some(Tok::Open) => {
                self.pos += 1;
                let inner = self.sum()?;
                if self.peek() != Some(&Tok::Close) {
                    return Err(Error::PolyParse("missing `)`".into()));
                }
                inner
            }
            _ => return Err(Error::PolyParse("empty term".into())),
        };
        self.pos += 1;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        match self.peek() {
            Some(Tok::Num(r)) if r.is_integer() && !r.is_negative() => {
                let k = r.to_integer().to_u32().ok_or_else(|| Error::PolyParse("exponent too large".into()))?;
                self.pos += 1;
                Ok(base.pow(k))
            }
            _ => Err(Error::PolyParse("expected integer exponent".into())),
        }
    }
}

impl MultiPoly {
    /// Parses a polynomial over the given variables. Accepts `*` or
    /// juxtaposition for products, `^` for non-negative integer powers, and
    /// parentheses.
    pub fn parse(text: &str, vars: &[&str]) -> Result<MultiPoly> {
        let mut parser = Parser { toks: tokenize(text)?, pos: 0, vars };
        let p = parser.sum()?;
        match parser.peek() {
            None => Ok(p),
            Some(Tok::Close) => Err(Error::PolyParse("unbalanced `)`".into())),
            Some(_) => Err(Error::PolyParse("expected `+` or `-` between terms".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn p(s: &str) -> MultiPoly {
        MultiPoly::parse(s, &["x", "y"]).unwrap()
    }

    #[test]
    fn arithmetic_basics() {
        let a = p("x + y");
        let b = p("x - y");
        assert_eq!(&a * &b, p("x^2 - y^2"));
        assert_eq!(&a + &b, p("2 * x"));
        assert!((&a - &a).is_zero());
        assert_eq!(a.pow(3), p("x^3 + 3 x^2 y + 3 x y^2 + y^3"));
    }

    #[test]
    fn renders_canonically() {
        let q = p("-1 + 3/2 * x y - y^2 + x^2");
        assert_eq!(q.to_string(), "x^2 + 3/2 * x y - y^2 - 1");
        assert_eq!(p("0").to_string(), "0");
        assert_eq!(p("-x").to_string(), "-x");
    }

    #[test]
    fn parse_errors() {
        assert!(MultiPoly::parse("x + z", &["x", "y"]).is_err());
        assert!(MultiPoly::parse("x +", &["x", "y"]).is_err());
        assert!(MultiPoly::parse("x ^ y", &["x", "y"]).is_err());
        assert!(MultiPoly::parse("x $ y", &["x", "y"]).is_err());
        assert!(MultiPoly::parse("(x + y", &["x", "y"]).is_err());
        assert!(MultiPoly::parse("x + y)", &["x", "y"]).is_err());
    }

    #[test]
    fn parenthesized_groups() {
        assert_eq!(p("(x + y)^2"), p("x^2 + 2 x y + y^2"));
        assert_eq!(p("-(x - 1)(x + 1)"), p("1 - x^2"));
        assert_eq!(p("2 * (x^2 + y^2 - 1)^0"), p("2"));
    }

    #[test]
    fn exact_division() {
        let a = p("x^2 - y^2");
        assert_eq!(a.exact_div(&p("x - y")).unwrap(), p("x + y"));
        assert_eq!(a.exact_div(&p("x + 1")), Err(Error::InexactDivision));
    }

    #[test]
    fn normalization() {
        let q = p("-2/3 * x + 4/9");
        assert_eq!(q.normalized(), p("3 x - 2"));
    }

    #[test]
    fn derivative_and_eval() {
        let q = p("x^3 y + 2 y^2");
        assert_eq!(q.derivative(0), p("3 x^2 y"));
        assert_eq!(q.derivative(1), p("x^3 + 4 y"));
        assert_eq!(q.eval_rational(&[rat(1, 2), rat(2, 1)]), rat(33, 4));
        assert!((q.eval_f64(&[0.5, 2.0]) - 8.25).abs() < 1e-15);
    }

    #[test]
    fn coefficient_view() {
        let q = p("x^2 y + 3 x y^2 - y + 5");
        let cs = q.coeffs_in(1);
        assert_eq!(cs.len(), 3);
        assert_eq!(cs[0], p("5"));
        assert_eq!(cs[1], p("x^2 - 1"));
        assert_eq!(cs[2], p("3 x"));
    }
}
