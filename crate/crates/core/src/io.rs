//! JSON exchange formats.
//!
//! * matrix tuple: `{"n": 2, "X": [[[..],[..]], ...]}`
//! * matrix polynomial: `{"shape": [d, e], "terms": [{"word": "x1*x2", "coeff": [[..]]}]}`
//! * pencil: `{"g": 2, "size": 3, "A0": [[..]] | "I", "A": [[[..]], ...]}`
//!
//! Matrix entries are numbers or rational strings (`"3/4"`); numbers are read
//! through their decimal text, so `0.1` means exactly `1/10`.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use crate::domination::{CertificateResiduals, DominationCertificate, SeparatingFunctional};
use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};
use crate::ncpoly::{parse, MatrixNcPoly, MatrixTuple, NcPoly, VariableContext, VariableKind, Word};
use crate::pencil::LinearPencil;
use crate::positivity::{DualFunctional, GramPart, QmCertificate, SosCertificate};
use crate::rat::{parse_rational, Rat, RatMatrix};

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| invalid(format!("missing field \"{key}\"")))
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| invalid(format!("{what} must be an array")))
}

fn usize_field(v: &Value, key: &str) -> Result<usize> {
    field(v, key)?
        .as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| invalid(format!("\"{key}\" must be a nonnegative integer")))
}

fn f64_field(v: &Value, key: &str) -> Result<f64> {
    field(v, key)?.as_f64().ok_or_else(|| invalid(format!("\"{key}\" must be a number")))
}

pub fn read_scalar(v: &Value) -> Result<Rat> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        _ => return Err(invalid(format!("expected a number or rational string, got {v}"))),
    };
    parse_rational(&text).ok_or_else(|| invalid(format!("cannot read \"{text}\" as a rational")))
}

pub fn read_rat_matrix(v: &Value) -> Result<RatMatrix> {
    let rows = array(v, "matrix")?;
    let rows = rows
        .iter()
        .map(|r| array(r, "matrix row")?.iter().map(read_scalar).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    RatMatrix::from_rows(rows)
}

pub fn read_matrix(v: &Value) -> Result<Mat> {
    Ok(read_rat_matrix(v)?.to_f64())
}

pub fn matrix_to_json(m: &Mat) -> Value {
    Value::Array((0..m.nrows()).map(|i| json!((0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<_>>())).collect())
}

pub fn vector_to_json(v: &Vector) -> Value {
    json!(v.iter().copied().collect::<Vec<_>>())
}

pub fn read_tuple(v: &Value, kind: VariableKind) -> Result<MatrixTuple> {
    let n = usize_field(v, "n")?;
    let mats = array(field(v, "X")?, "\"X\"")?.iter().map(read_matrix).collect::<Result<Vec<_>>>()?;
    if let Some(m) = mats.iter().find(|m| m.shape() != (n, n)) {
        return Err(Error::ShapeMismatch(format!(
            "tuple declares n = {n} but holds a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    MatrixTuple::new(kind, mats)
}

pub fn tuple_to_json(x: &MatrixTuple) -> Value {
    json!({ "n": x.n(), "X": x.matrices().iter().map(matrix_to_json).collect::<Vec<_>>() })
}

/// A single monomial such as `"x1*x2'"` or `"1"`.
pub fn parse_word(s: &str, ctx: VariableContext) -> Result<Word> {
    let p = parse(s, ctx)?;
    match p.terms().collect::<Vec<_>>().as_slice() {
        [(w, c)] if num_traits::One::is_one(*c) => Ok((*w).clone()),
        _ => Err(invalid(format!("\"{s}\" is not a monomial word"))),
    }
}

pub fn read_matrix_poly(v: &Value, ctx: VariableContext) -> Result<MatrixNcPoly> {
    let shape = array(field(v, "shape")?, "\"shape\"")?;
    let dims: Vec<usize> = shape.iter().filter_map(Value::as_u64).map(|d| d as usize).collect();
    let [d, e] = dims[..] else {
        return Err(invalid("\"shape\" must be [rows, cols]"));
    };
    let mut out = MatrixNcPoly::zero(ctx, (d, e));
    for t in array(field(v, "terms")?, "\"terms\"")? {
        let word = field(t, "word")?.as_str().ok_or_else(|| invalid("\"word\" must be a string"))?;
        out.add_term(parse_word(word, ctx)?, &read_rat_matrix(field(t, "coeff")?)?)?;
    }
    Ok(out)
}

fn rat_matrix_to_json(m: &RatMatrix) -> Value {
    let (r, c) = m.shape();
    Value::Array(
        (0..r).map(|i| json!((0..c).map(|j| crate::rat::format_rational(&m[(i, j)])).collect::<Vec<_>>())).collect(),
    )
}

pub fn matrix_poly_to_json(p: &MatrixNcPoly) -> Value {
    let (d, e) = p.shape();
    let terms: Vec<Value> =
        p.terms().map(|(w, m)| json!({ "word": w.to_string(), "coeff": rat_matrix_to_json(m) })).collect();
    json!({ "shape": [d, e], "terms": terms })
}

pub fn read_pencil(v: &Value) -> Result<LinearPencil> {
    let g = usize_field(v, "g")?;
    let size = usize_field(v, "size")?;
    let a: Vec<RatMatrix> = array(field(v, "A")?, "\"A\"")?.iter().map(read_rat_matrix).collect::<Result<_>>()?;
    if a.len() != g {
        return Err(Error::ShapeMismatch(format!("pencil declares g = {g} but lists {} coefficients", a.len())));
    }
    let a0 = match v.get("A0") {
        None => RatMatrix::identity(size),
        Some(Value::String(s)) if s == "I" => RatMatrix::identity(size),
        Some(m) => read_rat_matrix(m)?,
    };
    if let Some(m) = std::iter::once(&a0).chain(&a).find(|m| m.shape() != (size, size)) {
        let (r, c) = m.shape();
        return Err(Error::ShapeMismatch(format!("pencil declares size {size} but holds a {r}x{c} matrix")));
    }
    LinearPencil::from_rational(&a0, &a)
}

pub fn pencil_to_json(l: &LinearPencil) -> Value {
    let a0 = if l.is_monic() { json!("I") } else { matrix_to_json(l.a0()) };
    json!({
        "g": l.g(),
        "size": l.size(),
        "A0": a0,
        "A": l.coeffs().iter().map(matrix_to_json).collect::<Vec<_>>(),
    })
}

pub fn domination_certificate_to_json(c: &DominationCertificate, r: &CertificateResiduals) -> Value {
    json!({
        "mu": c.mu(),
        "V": c.v.iter().map(matrix_to_json).collect::<Vec<_>>(),
        "residuals": { "isometry": r.isometry, "coefficients": r.coefficients },
    })
}

pub fn read_domination_certificate(v: &Value) -> Result<DominationCertificate> {
    let blocks = array(field(v, "V")?, "\"V\"")?.iter().map(read_matrix).collect::<Result<Vec<_>>>()?;
    if let Some(mu) = v.get("mu").and_then(Value::as_u64) {
        if mu as usize != blocks.len() {
            return Err(invalid(format!("\"mu\" is {mu} but {} blocks are listed", blocks.len())));
        }
    }
    Ok(DominationCertificate { v: blocks })
}

pub fn separating_functional_to_json(s: &SeparatingFunctional) -> Value {
    json!({
        "Z0": matrix_to_json(&s.z0),
        "Z": s.z.iter().map(matrix_to_json).collect::<Vec<_>>(),
        "value": s.value,
        "residual": s.residual,
    })
}

fn words_to_json(basis: &[Word]) -> Value {
    json!(basis.iter().map(Word::to_string).collect::<Vec<_>>())
}

fn read_words(v: &Value, ctx: VariableContext) -> Result<Vec<Word>> {
    array(v, "basis")?
        .iter()
        .map(|w| parse_word(w.as_str().ok_or_else(|| invalid("basis words must be strings"))?, ctx))
        .collect()
}

fn read_square(v: &Value, n: usize, what: &str) -> Result<Mat> {
    let m = read_matrix(v)?;
    if m.shape() != (n, n) {
        return Err(Error::ShapeMismatch(format!("{what} is {}x{} for a basis of {n} words", m.nrows(), m.ncols())));
    }
    Ok(m)
}

fn read_poly(v: &Value, ctx: VariableContext) -> Result<NcPoly> {
    parse(v.as_str().ok_or_else(|| invalid("polynomials must be expression strings"))?, ctx)
}

pub fn sos_certificate_to_json(c: &SosCertificate) -> Value {
    json!({
        "basis": words_to_json(&c.basis),
        "gram": matrix_to_json(&c.gram),
        "factors": c.factors.iter().map(NcPoly::to_string).collect::<Vec<_>>(),
        "residual": c.residual,
        "cyclic": c.cyclic,
    })
}

pub fn read_sos_certificate(v: &Value, ctx: VariableContext) -> Result<SosCertificate> {
    let basis = read_words(field(v, "basis")?, ctx)?;
    let gram = read_square(field(v, "gram")?, basis.len(), "gram")?;
    let factors =
        array(field(v, "factors")?, "\"factors\"")?.iter().map(|f| read_poly(f, ctx)).collect::<Result<_>>()?;
    let cyclic = field(v, "cyclic")?.as_bool().ok_or_else(|| invalid("\"cyclic\" must be a boolean"))?;
    Ok(SosCertificate { basis, gram, factors, residual: f64_field(v, "residual")?, cyclic })
}

fn gram_part_to_json(p: &GramPart) -> Value {
    json!({ "basis": words_to_json(&p.basis), "weight": p.weight.to_string(), "gram": matrix_to_json(&p.gram) })
}

fn read_gram_part(v: &Value, ctx: VariableContext) -> Result<GramPart> {
    let basis = read_words(field(v, "basis")?, ctx)?;
    let gram = read_square(field(v, "gram")?, basis.len(), "gram")?;
    Ok(GramPart { basis, weight: read_poly(field(v, "weight")?, ctx)?, gram })
}

pub fn qm_certificate_to_json(c: &QmCertificate) -> Value {
    json!({
        "sigma0": gram_part_to_json(&c.sigma0),
        "localizing": c.localizing.iter().map(gram_part_to_json).collect::<Vec<_>>(),
        "ideal_terms": c.ideal_terms.iter().map(|(t, z)| json!({ "term": t.to_string(), "coeff": z })).collect::<Vec<_>>(),
        "residual": c.residual,
    })
}

pub fn read_qm_certificate(v: &Value, ctx: VariableContext) -> Result<QmCertificate> {
    let sigma0 = read_gram_part(field(v, "sigma0")?, ctx)?;
    let localizing = array(field(v, "localizing")?, "\"localizing\"")?
        .iter()
        .map(|p| read_gram_part(p, ctx))
        .collect::<Result<_>>()?;
    let ideal_terms = match v.get("ideal_terms") {
        None => Vec::new(),
        Some(t) => array(t, "\"ideal_terms\"")?
            .iter()
            .map(|t| Ok((read_poly(field(t, "term")?, ctx)?, f64_field(t, "coeff")?)))
            .collect::<Result<_>>()?,
    };
    Ok(QmCertificate { sigma0, localizing, ideal_terms, residual: f64_field(v, "residual")? })
}

pub fn moments_to_json(m: &BTreeMap<Word, f64>) -> Value {
    Value::Object(m.iter().map(|(w, y)| (w.to_string(), json!(y))).collect::<Map<_, _>>())
}

pub fn read_moments(v: &Value, ctx: VariableContext) -> Result<BTreeMap<Word, f64>> {
    let obj = v.as_object().ok_or_else(|| invalid("moments must be a {\"word\": value} object"))?;
    obj.iter()
        .map(|(k, y)| {
            let y = y.as_f64().ok_or_else(|| invalid(format!("moment of {k} must be a number")))?;
            Ok((parse_word(k, ctx)?, y))
        })
        .collect()
}

pub fn dual_to_json(d: &DualFunctional) -> Value {
    json!({ "values": moments_to_json(&d.values), "value": d.value, "residual": d.residual })
}

/// Polynomial coefficients as exact rational strings keyed by word.
pub fn poly_coefficients(p: &NcPoly) -> Value {
    Value::Object(p.terms().map(|(w, c)| (w.to_string(), json!(crate::rat::format_rational(c)))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::positivity::sos_decompose;

    #[test]
    fn tuple_roundtrip_and_validation() {
        let v: Value = serde_json::from_str(r#"{"n":2,"X":[[[0.5,0],[0,"0"]],[[0,"3/4"],[0.75,0]]]}"#).unwrap();
        let x = read_tuple(&v, VariableKind::Symmetric).unwrap();
        assert_eq!(x.matrices()[1][(0, 1)], 0.75);
        let back = read_tuple(&tuple_to_json(&x), VariableKind::Symmetric).unwrap();
        assert_eq!(back.matrices(), x.matrices());
        let bad: Value = serde_json::from_str(r#"{"n":2,"X":[[[1,0,0],[0,1,0],[0,0,1]]]}"#).unwrap();
        assert!(matches!(read_tuple(&bad, VariableKind::Symmetric), Err(Error::ShapeMismatch(_))));
        let asym: Value = serde_json::from_str(r#"{"n":2,"X":[[[0,1],[0,0]]]}"#).unwrap();
        assert!(read_tuple(&asym, VariableKind::Symmetric).is_err());
        assert!(read_tuple(&asym, VariableKind::Free).is_ok());
    }

    #[test]
    fn pencil_formats() {
        let v: Value = serde_json::from_str(r#"{"g":2,"size":2,"A0":"I","A":[[[1,0],[0,-1]],[[0,1],[1,0]]]}"#).unwrap();
        let l = read_pencil(&v).unwrap();
        assert!(l.is_monic());
        assert_eq!(l.eval_scalar(&[0.5, 0.25]).unwrap()[(1, 1)], 0.5);
        let back = read_pencil(&pencil_to_json(&l)).unwrap();
        assert_eq!(back.coeffs(), l.coeffs());
        let explicit: Value = serde_json::from_str(r#"{"g":1,"size":1,"A0":[["2"]],"A":[[[1]]]}"#).unwrap();
        assert!(!read_pencil(&explicit).unwrap().is_monic());
        let wrong: Value = serde_json::from_str(r#"{"g":2,"size":2,"A":[[[1,0],[0,-1]]]}"#).unwrap();
        assert!(read_pencil(&wrong).is_err());
    }

    #[test]
    fn matrix_poly_roundtrip() {
        let ctx = VariableContext::free(2);
        let v: Value = serde_json::from_str(
            r#"{"shape":[2,2],"terms":[{"word":"x1*x2'","coeff":[[1,0],[0,"1/3"]]},{"word":"1","coeff":[[0,1],[1,0]]}]}"#,
        )
        .unwrap();
        let p = read_matrix_poly(&v, ctx).unwrap();
        assert_eq!(
            read_matrix_poly(&matrix_poly_to_json(&p), ctx).unwrap().coeff(&Word::empty()),
            p.coeff(&Word::empty())
        );
        assert!(parse_word("2*x1", ctx).is_err());
        assert!(parse_word("x1 + x2", ctx).is_err());
    }

    #[test]
    fn sos_certificate_roundtrip() {
        let ctx = VariableContext::symmetric(2);
        let p = parse("x^2 + x*y + y*x + 2*y^2", ctx).unwrap();
        let c = sos_decompose(&p).unwrap().certificate().unwrap().clone();
        let back = read_sos_certificate(&sos_certificate_to_json(&c), ctx).unwrap();
        assert_eq!(back.basis, c.basis);
        assert!(back.verify(&p) <= 1e-7);
        let mut m = BTreeMap::new();
        m.insert(Word::from_vars(&[0, 1]), 0.5);
        assert_eq!(read_moments(&moments_to_json(&m), ctx).unwrap(), m);
    }
}
