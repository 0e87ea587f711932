//! TOML tensor and field files.
//!
//! Tensor file:
//!
//! ```toml
//! dim = 2
//! scalar_kind = "rational"   # or "float"
//!
//! [components]               # canonical one-based index quadruples
//! 1111 = "4"
//! 1122 = "2"
//! 1212 = "1"
//! 2222 = "4"
//! ```
//!
//! Field file: a `[domain]` table (`shape = "annulus"` with `dim` and
//! `inner_radius`, or `shape = "box"` with `lo`/`hi`), a top-level
//! `regularity`, and exactly one `[kind.*]` table: `constant` (an inline
//! tensor), `isotropic-radial` (`lambda`, `mu` profiles) or
//! `perturbed-isotropic` (profiles plus a `delta` tensor). Profiles are
//! `{ coefficients = [...] }` or `{ r = [...], values = [...] }`.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::scalar::{parse_rational, rational_to_string, Rational, Scalar, ScalarKind};

use super::field::{Domain, FieldKind, RadialProfile, StiffnessField};
use super::tensor::{canonical_index, StiffnessTensor};

/// A tensor read from a file, in whichever scalar kind it declared.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyTensor {
    Rational(StiffnessTensor<Rational>),
    Float(StiffnessTensor<f64>),
}

impl AnyTensor {
    pub fn dim(&self) -> usize {
        match self {
            AnyTensor::Rational(t) => t.dim(),
            AnyTensor::Float(t) => t.dim(),
        }
    }

    pub fn to_f64(&self) -> StiffnessTensor<f64> {
        match self {
            AnyTensor::Rational(t) => t.to_f64(),
            AnyTensor::Float(t) => t.clone(),
        }
    }

    /// Exact view; floats convert exactly to their binary rational value.
    pub fn to_rational(&self) -> Result<StiffnessTensor<Rational>> {
        match self {
            AnyTensor::Rational(t) => Ok(t.clone()),
            AnyTensor::Float(t) => t.to_rational(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorFile {
    dim: usize,
    scalar_kind: ScalarKind,
    components: BTreeMap<String, toml::Value>,
}

fn parse_index(key: &str, dim: usize) -> Result<[usize; 4]> {
    let digits: Vec<usize> = key
        .chars()
        .map(|c| c.to_digit(10).map(|d| d as usize))
        .collect::<Option<Vec<_>>>()
        .filter(|d| d.len() == 4)
        .ok_or_else(|| Error::Format(format!("component key `{key}` is not four digits")))?;
    if digits.iter().any(|&d| d == 0 || d > dim) {
        return Err(Error::Format(format!("component key `{key}` out of range for dim {dim}")));
    }
    let idx = [digits[0] - 1, digits[1] - 1, digits[2] - 1, digits[3] - 1];
    let canon = canonical_index(idx);
    if canon != idx {
        let c: String = canon.iter().map(|i| char::from(b'1' + *i as u8)).collect();
        return Err(Error::Format(format!("component key `{key}` is not canonical (use `{c}`)")));
    }
    Ok(idx)
}

fn value_to_rational(v: &toml::Value) -> Result<Rational> {
    match v {
        toml::Value::String(s) => parse_rational(s).ok_or_else(|| Error::Format(format!("bad rational `{s}`"))),
        toml::Value::Integer(i) => Ok(Rational::from_i64(*i)),
        other => Err(Error::Format(format!("rational components must be strings or integers, got {other}"))),
    }
}

fn value_to_f64(v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        toml::Value::String(s) => parse_rational(s)
            .map(|r| r.to_f64())
            .ok_or_else(|| Error::Format(format!("bad number `{s}`"))),
        other => Err(Error::Format(format!("expected a number, got {other}"))),
    }
}

fn tensor_from_file(f: TensorFile) -> Result<AnyTensor> {
    if !(2..=9).contains(&f.dim) {
        return Err(Error::UnsupportedDimension(f.dim));
    }
    let idx = f
        .components
        .iter()
        .map(|(k, v)| Ok((parse_index(k, f.dim)?, v)))
        .collect::<Result<Vec<_>>>()?;
    match f.scalar_kind {
        ScalarKind::Rational => {
            let comps = idx
                .into_iter()
                .map(|(i, v)| Ok((i, value_to_rational(v)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(AnyTensor::Rational(StiffnessTensor::from_components(f.dim, comps)?))
        }
        ScalarKind::Float => {
            let comps = idx
                .into_iter()
                .map(|(i, v)| Ok((i, value_to_f64(v)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(AnyTensor::Float(StiffnessTensor::from_components(f.dim, comps)?))
        }
    }
}

fn de_err(e: toml::de::Error) -> Error {
    Error::Format(e.to_string())
}

pub fn parse_tensor(text: &str) -> Result<AnyTensor> {
    let f: TensorFile = toml::from_str(text).map_err(de_err)?;
    tensor_from_file(f)
}

/// Renders a tensor in the file format, listing nonzero canonical components.
pub fn tensor_to_toml<T: Scalar>(c: &StiffnessTensor<T>) -> String {
    let kind = match T::KIND {
        ScalarKind::Rational => "rational",
        ScalarKind::Float => "float",
    };
    let mut out = format!("dim = {}\nscalar_kind = \"{kind}\"\n\n[components]\n", c.dim());
    for (idx, v) in c.canonical_components() {
        if v.is_zero() {
            continue;
        }
        let key: String = idx.iter().map(|i| char::from(b'1' + *i as u8)).collect();
        let val = match T::KIND {
            ScalarKind::Rational => format!("\"{}\"", rational_to_string(&v.to_rational().unwrap())),
            ScalarKind::Float => format!("{:?}", v.to_f64()),
        };
        out.push_str(&format!("{key} = {val}\n"));
    }
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainFile {
    shape: String,
    dim: Option<usize>,
    inner_radius: Option<f64>,
    lo: Option<Vec<f64>>,
    hi: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, untagged)]
enum ProfileFile {
    Polynomial { coefficients: Vec<f64> },
    Table { r: Vec<f64>, values: Vec<f64> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RadialFile {
    lambda: ProfileFile,
    mu: ProfileFile,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PerturbedFile {
    lambda: ProfileFile,
    mu: ProfileFile,
    delta: TensorFile,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
enum KindFile {
    Constant(TensorFile),
    IsotropicRadial(RadialFile),
    PerturbedIsotropic(PerturbedFile),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldFile {
    regularity: u32,
    domain: DomainFile,
    kind: KindFile,
}

fn profile(p: ProfileFile) -> Result<RadialProfile> {
    match p {
        ProfileFile::Polynomial { coefficients } if !coefficients.is_empty() => Ok(RadialProfile::Polynomial(coefficients)),
        ProfileFile::Polynomial { .. } => Err(Error::Format("empty coefficient list".into())),
        ProfileFile::Table { r, values } => RadialProfile::table(r, values),
    }
}

pub fn parse_field(text: &str) -> Result<StiffnessField> {
    let f: FieldFile = toml::from_str(text).map_err(de_err)?;
    let d = f.domain;
    let domain = match d.shape.as_str() {
        "annulus" => {
            if d.lo.is_some() || d.hi.is_some() {
                return Err(Error::Format("annulus domain takes `dim` and `inner_radius` only".into()));
            }
            let dim = d.dim.ok_or_else(|| Error::Format("annulus needs `dim`".into()))?;
            let r = d.inner_radius.ok_or_else(|| Error::Format("annulus needs `inner_radius`".into()))?;
            Domain::annulus(dim, r)?
        }
        "box" => {
            if d.inner_radius.is_some() {
                return Err(Error::Format("box domain takes `lo` and `hi` only".into()));
            }
            let lo = d.lo.ok_or_else(|| Error::Format("box needs `lo`".into()))?;
            let hi = d.hi.ok_or_else(|| Error::Format("box needs `hi`".into()))?;
            if d.dim.is_some_and(|n| n != lo.len()) {
                return Err(Error::Format("box `dim` disagrees with `lo`".into()));
            }
            Domain::Box { lo, hi }
        }
        other => return Err(Error::Format(format!("unknown domain shape `{other}`"))),
    };
    let kind = match f.kind {
        KindFile::Constant(t) => FieldKind::Constant(tensor_from_file(t)?.to_f64()),
        KindFile::IsotropicRadial(r) => FieldKind::IsotropicRadial {
            lambda: profile(r.lambda)?,
            mu: profile(r.mu)?,
        },
        KindFile::PerturbedIsotropic(p) => FieldKind::PerturbedIsotropic {
            lambda: profile(p.lambda)?,
            mu: profile(p.mu)?,
            delta: tensor_from_file(p.delta)?.to_f64(),
        },
    };
    StiffnessField::new(domain, kind, f.regularity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use crate::stiffness::make_isotropic;

    const ISO: &str = r#"
dim = 2
scalar_kind = "rational"

[components]
1111 = "4"
1122 = "2"
1212 = "1"
2222 = "4"
"#;

    #[test]
    fn parses_rational_tensor() {
        let t = parse_tensor(ISO).unwrap();
        assert_eq!(t, AnyTensor::Rational(make_isotropic(2, rat(2, 1), rat(1, 1))));
    }

    #[test]
    fn rejects_unknown_keys_and_noncanonical_indices() {
        assert!(parse_tensor(&format!("{ISO}\nextra = 1\n")).is_err());
        let bad = ISO.replace("1212", "2121");
        let err = parse_tensor(&bad).unwrap_err().to_string();
        assert!(err.contains("not canonical"), "{err}");
        assert!(parse_tensor(&ISO.replace("1212", "1313")).is_err());
    }

    #[test]
    fn rational_kind_rejects_floats() {
        assert!(parse_tensor(&ISO.replace("\"4\"", "4.5")).is_err());
    }

    #[test]
    fn tensor_text_roundtrip() {
        let c = make_isotropic(3, rat(3, 2), rat(1, 3));
        assert_eq!(parse_tensor(&tensor_to_toml(&c)).unwrap(), AnyTensor::Rational(c));
        let f = make_isotropic(2, 0.1, 0.7);
        assert_eq!(parse_tensor(&tensor_to_toml(&f)).unwrap(), AnyTensor::Float(f));
    }

    #[test]
    fn parses_fields() {
        let radial = r#"
regularity = 3
[domain]
shape = "annulus"
dim = 2
inner_radius = 0.3
[kind.isotropic-radial]
lambda = { coefficients = [2.0] }
mu = { r = [0.0, 1.0], values = [1.0, 1.5] }
"#;
        let f = parse_field(radial).unwrap();
        assert_eq!(f.regularity(), 3);
        assert!(matches!(f.kind(), FieldKind::IsotropicRadial { .. }));

        let constant = r#"
regularity = 10
[domain]
shape = "box"
lo = [-1.0, -1.0]
hi = [1.0, 1.0]
[kind.constant]
dim = 2
scalar_kind = "float"
[kind.constant.components]
1111 = 4.0
1122 = 2.0
1212 = 1.0
2222 = 4.0
"#;
        let f = parse_field(constant).unwrap();
        assert!(f.is_constant());
        assert!(parse_field(&constant.replace("regularity = 10", "regularity = 10\nbogus = 1")).is_err());
        assert!(parse_field(&radial.replace("inner_radius = 0.3", "inner_radius = 1.3")).is_err());
    }
}
