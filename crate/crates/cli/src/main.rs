use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use ncert::domination::{check_domination, matrix_cube, radius, sets_equal};
use ncert::io;
use ncert::linalg::{max_abs, min_eig, symmetrize};
use ncert::ncpoly::{cyclically_equivalent, parse, MatrixNcPoly, MatrixTuple, NcPoly, VariableContext, VariableKind};
use ncert::pencil::{minimal_defining_pencil, unitarily_equivalent, Equivalence, LinearPencil};
use ncert::positivity::{
    convexity_check_with, cyclic_sos_decompose, eigenvalue_optimize, extract_minimizer, kth_derivative_positivity,
    left_ideal_membership, qm_membership_with_ideal, sos_decompose, trace_zero_check, ConvexityOptions,
    EigenvalueResult, LeftIdealResult, MinimizerOutcome, QmResult, SosCertificate, SosOutcome, RESIDUAL_TOL,
};
use ncert::rat::from_f64;
use ncert::Error;

/// Certificates for free semialgebraic geometry: sums of squares, eigenvalue
/// bounds, LMI domination and friends. Every run prints one JSON object.
#[derive(Parser)]
#[command(name = "ncert", version)]
struct Cli {
    /// Seed for all random sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args, Clone)]
struct Vars {
    /// Number of variables; inferred from the expressions when omitted.
    #[arg(long)]
    vars: Option<usize>,
    /// Free (non-symmetric) variables: `x'` is a separate letter.
    #[arg(long)]
    free: bool,
}

#[derive(Args, Clone)]
struct PolyIn {
    #[arg(long, allow_hyphen_values = true)]
    poly: String,
    #[command(flatten)]
    vars: Vars,
}

#[derive(Args, Clone)]
struct CertIn {
    #[command(flatten)]
    input: PolyIn,
    /// Re-check a previously emitted certificate instead of solving.
    #[arg(long, value_name = "FILE")]
    verify: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Verb {
    /// Evaluate a polynomial (or a matrix polynomial) at a matrix tuple.
    Eval {
        #[arg(long, allow_hyphen_values = true)]
        poly: Option<String>,
        /// Matrix-valued polynomial file.
        #[arg(long, value_name = "FILE")]
        matrix_poly: Option<PathBuf>,
        #[arg(long = "X", value_name = "FILE")]
        x: PathBuf,
        #[command(flatten)]
        vars: Vars,
    },
    /// k-th directional derivative, optionally evaluated at (X, H).
    Derivative {
        #[command(flatten)]
        input: PolyIn,
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[arg(long = "X", value_name = "FILE", requires = "h")]
        x: Option<PathBuf>,
        #[arg(long = "H", value_name = "FILE", requires = "x")]
        h: Option<PathBuf>,
        /// Also test the derivative for being a sum of squares.
        #[arg(long)]
        sos: bool,
    },
    /// Cyclic equivalence of two polynomials.
    Cyceq {
        #[command(flatten)]
        input: PolyIn,
        #[arg(long, allow_hyphen_values = true)]
        other: String,
    },
    /// Sum-of-squares decomposition.
    Sos(CertIn),
    /// Smallest eigenvalue bound over all matrix sizes.
    Eigopt(CertIn),
    /// Eigenvalue bound plus an extracted minimizing tuple.
    Minimizer {
        #[command(flatten)]
        input: PolyIn,
    },
    /// Quadratic module membership at a degree budget.
    Qm {
        #[command(flatten)]
        cert: CertIn,
        /// Generator of the quadratic module (repeatable).
        #[arg(long = "q", allow_hyphen_values = true)]
        q: Vec<String>,
        /// Generator of a two-sided ideal to quotient by (repeatable).
        #[arg(long, allow_hyphen_values = true)]
        ideal: Vec<String>,
        #[arg(long)]
        degree: usize,
    },
    /// Left ideal membership at a degree budget.
    Ideal {
        #[command(flatten)]
        cert: CertIn,
        #[arg(long = "q", allow_hyphen_values = true)]
        q: Vec<String>,
        #[arg(long)]
        degree: usize,
    },
    /// Sum of squares up to commutators.
    CycSos(CertIn),
    /// Whether a polynomial is a sum of commutators.
    TraceZero {
        #[command(flatten)]
        input: PolyIn,
    },
    /// Matrix convexity.
    Convex(CertIn),
    /// Domination of LMI solution sets.
    Dominate {
        #[arg(long = "L1", value_name = "FILE")]
        l1: PathBuf,
        #[arg(long = "L2", value_name = "FILE")]
        l2: PathBuf,
        #[arg(long, value_name = "FILE")]
        verify: Option<PathBuf>,
    },
    /// Equality of LMI solution sets.
    Equal {
        #[arg(long = "L1", value_name = "FILE")]
        l1: PathBuf,
        #[arg(long = "L2", value_name = "FILE")]
        l2: PathBuf,
    },
    /// Radius of the smallest ball containing the solution set.
    Radius {
        #[arg(long = "L", value_name = "FILE")]
        l: PathBuf,
    },
    /// Half-width of the largest matrix cube in the solution set.
    Cube {
        #[arg(long = "L", value_name = "FILE")]
        l: PathBuf,
    },
    /// Minimal defining subpencil.
    Minpencil {
        #[arg(long = "L", value_name = "FILE")]
        l: PathBuf,
    },
    /// Unitary equivalence of two monic pencils.
    Uniteq {
        #[arg(long = "L1", value_name = "FILE")]
        l1: PathBuf,
        #[arg(long = "L2", value_name = "FILE")]
        l2: PathBuf,
    },
}

#[derive(Default)]
struct Output {
    result: Value,
    certificate: Option<Value>,
    residuals: Option<Value>,
}

impl Output {
    fn result(result: Value) -> Self {
        Output { result, ..Default::default() }
    }
}

/// Largest variable index mentioned in the expressions (`x`, `y`, `z` count
/// as 1, 2, 3).
fn infer_vars<'a>(exprs: impl IntoIterator<Item = &'a str>) -> usize {
    let mut g = 1;
    for e in exprs {
        let b = e.as_bytes();
        let mut i = 0;
        while i < b.len() {
            match b[i] {
                b'x' => {
                    let start = i + 1;
                    let mut end = start;
                    while end < b.len() && b[end].is_ascii_digit() {
                        end += 1;
                    }
                    g = g.max(e[start..end].parse().unwrap_or(1));
                    i = end;
                    continue;
                }
                b'y' => g = g.max(2),
                b'z' => g = g.max(3),
                _ => {}
            }
            i += 1;
        }
    }
    g
}

fn context<'a>(vars: &Vars, exprs: impl IntoIterator<Item = &'a str>) -> Result<VariableContext, Error> {
    let g = vars.vars.unwrap_or_else(|| infer_vars(exprs));
    VariableContext::new(g, if vars.free { VariableKind::Free } else { VariableKind::Symmetric })
}

fn read_json(path: &Path) -> Result<Value, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn read_pencil(path: &Path) -> Result<LinearPencil, Error> {
    io::read_pencil(&read_json(path)?)
}

/// The certificate object of a saved run, or the file itself.
fn saved_certificate(saved: &Value) -> Result<&Value, Error> {
    match saved.get("certificate") {
        Some(Value::Null) => Err(Error::InvalidInput("saved run carries no certificate".into())),
        Some(c) => Ok(c),
        None => Ok(saved),
    }
}

fn psd_floor(m: &ncert::linalg::Mat) -> f64 {
    -1e-9 * max_abs(m).max(1.0)
}

fn sos_json(outcome: &SosOutcome) -> Output {
    match outcome {
        SosOutcome::Certificate(c) => Output {
            result: json!({ "sos": true, "num_factors": c.factors.len(), "gram_min_eig": c.gram_min_eig() }),
            certificate: Some(io::sos_certificate_to_json(c)),
            residuals: Some(json!({ "reconstruction": c.residual })),
        },
        SosOutcome::Infeasible(inf) => Output::result(json!({
            "sos": false,
            "reason": inf.reason,
            "dual": inf.dual.as_ref().map(io::dual_to_json),
        })),
    }
}

fn verify_sos(p: &NcPoly, cert: &SosCertificate) -> Output {
    let residual = cert.verify(p);
    let eig = cert.gram_min_eig();
    let valid = residual <= RESIDUAL_TOL && (cert.basis.is_empty() || eig >= psd_floor(&cert.gram));
    Output {
        result: json!({ "valid": valid, "gram_min_eig": eig }),
        residuals: Some(json!({ "reconstruction": residual })),
        ..Default::default()
    }
}

fn run_sos(args: &CertIn, cyclic: bool) -> Result<Output, Error> {
    let ctx = context(&args.input.vars, [args.input.poly.as_str()])?;
    let p = parse(&args.input.poly, ctx)?;
    if let Some(path) = &args.verify {
        let cert = io::read_sos_certificate(saved_certificate(&read_json(path)?)?, ctx)?;
        if cert.cyclic != cyclic {
            return Err(Error::InvalidInput("certificate kind does not match the verb".into()));
        }
        return Ok(verify_sos(&p, &cert));
    }
    let outcome = if cyclic { cyclic_sos_decompose(&p)? } else { sos_decompose(&p)? };
    Ok(sos_json(&outcome))
}

fn run_eigopt(args: &CertIn) -> Result<Output, Error> {
    let ctx = context(&args.input.vars, [args.input.poly.as_str()])?;
    let f = parse(&args.input.poly, ctx)?;
    if let Some(path) = &args.verify {
        let saved = read_json(path)?;
        let f_star = saved
            .pointer("/result/f_star")
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::InvalidInput("saved run has no result.f_star".into()))?;
        let cert = io::read_sos_certificate(saved_certificate(&saved)?, ctx)?;
        let shifted = f.try_sub(&NcPoly::constant(ctx, from_f64(f_star)))?;
        let mut out = verify_sos(&shifted, &cert);
        out.result["f_star"] = json!(f_star);
        return Ok(out);
    }
    Ok(match eigenvalue_optimize(&f)? {
        EigenvalueResult::UnboundedBelow { reason } => Output::result(json!({ "bounded": false, "reason": reason })),
        EigenvalueResult::Bounded(b) => Output {
            result: json!({
                "bounded": true,
                "f_star": b.f_star,
                "moments": io::moments_to_json(&b.moments.moments),
                "moment_rank": b.moments.rank,
                "flat": b.moments.flat,
                "rank_ambiguous": b.moments.rank_ambiguous,
            }),
            certificate: Some(io::sos_certificate_to_json(&b.certificate)),
            residuals: Some(json!({ "reconstruction": b.certificate.residual })),
        },
    })
}

fn run_minimizer(input: &PolyIn) -> Result<Output, Error> {
    let ctx = context(&input.vars, [input.poly.as_str()])?;
    let f = parse(&input.poly, ctx)?;
    let bound = match eigenvalue_optimize(&f)? {
        EigenvalueResult::UnboundedBelow { reason } => {
            return Ok(Output::result(json!({ "bounded": false, "found": false, "reason": reason })))
        }
        EigenvalueResult::Bounded(b) => b,
    };
    let base = json!({ "bounded": true, "f_star": bound.f_star, "moment_rank": bound.moments.rank });
    let mut result = base;
    match extract_minimizer(&bound.moments, &f)? {
        MinimizerOutcome::Found(m) => {
            let fa = f.evaluate(&m.a)?;
            let gap = (m.value - bound.f_star).abs();
            result["found"] = json!(true);
            result["A"] = io::tuple_to_json(&m.a);
            result["v"] = io::vector_to_json(&m.v);
            result["value"] = json!(m.value);
            result["min_eig"] = json!(min_eig(&symmetrize(&fa)));
            return Ok(Output { result, residuals: Some(json!({ "value_gap": gap })), ..Default::default() });
        }
        MinimizerOutcome::NotFlat => {
            result["found"] = json!(false);
            result["reason"] = json!("moment matrix is not flat");
        }
        MinimizerOutcome::RankAmbiguous => {
            result["found"] = json!(false);
            result["reason"] = json!("rank_ambiguous");
        }
    }
    Ok(Output::result(result))
}

fn parse_all(exprs: &[String], ctx: VariableContext) -> Result<Vec<NcPoly>, Error> {
    exprs.iter().map(|e| parse(e, ctx)).collect()
}

fn run_qm(cert: &CertIn, q: &[String], ideal: &[String], degree: usize) -> Result<Output, Error> {
    let exprs = std::iter::once(&cert.input.poly).chain(q).chain(ideal).map(String::as_str);
    let ctx = context(&cert.input.vars, exprs)?;
    let p = parse(&cert.input.poly, ctx)?;
    if let Some(path) = &cert.verify {
        let c = io::read_qm_certificate(saved_certificate(&read_json(path)?)?, ctx)?;
        let residual = c.verify(&p);
        let eig = c.min_gram_eig();
        let valid = residual <= RESIDUAL_TOL && eig >= -1e-9;
        return Ok(Output {
            result: json!({ "valid": valid, "gram_min_eig": eig }),
            residuals: Some(json!({ "reconstruction": residual })),
            ..Default::default()
        });
    }
    let (qs, rs) = (parse_all(q, ctx)?, parse_all(ideal, ctx)?);
    Ok(match qm_membership_with_ideal(&p, &qs, &rs, degree)? {
        QmResult::Member(c) => Output {
            result: json!({ "member": true, "degree": degree }),
            certificate: Some(io::qm_certificate_to_json(&c)),
            residuals: Some(json!({ "reconstruction": c.residual })),
        },
        QmResult::NotMemberAtDegree { degree, dual } => Output::result(json!({
            "member": false,
            "degree": degree,
            "note": "no certificate at this degree; larger degrees are not ruled out",
            "dual": dual.as_ref().map(io::dual_to_json),
        })),
        QmResult::DegreeTooSmall { required } => {
            Output::result(json!({ "member": false, "degree": degree, "degree_too_small": true, "required": required }))
        }
    })
}

fn run_ideal(cert: &CertIn, q: &[String], degree: usize) -> Result<Output, Error> {
    let exprs = std::iter::once(&cert.input.poly).chain(q).map(String::as_str);
    let ctx = context(&cert.input.vars, exprs)?;
    let p = parse(&cert.input.poly, ctx)?;
    let qs = parse_all(q, ctx)?;
    if let Some(path) = &cert.verify {
        let saved = read_json(path)?;
        let cofactors = saved_certificate(&saved)?
            .get("cofactors")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::InvalidInput("certificate has no \"cofactors\" array".into()))?;
        if cofactors.len() != qs.len() {
            return Err(Error::ShapeMismatch(format!("{} cofactors for {} generators", cofactors.len(), qs.len())));
        }
        let mut r = p.clone();
        for (c, qi) in cofactors.iter().zip(&qs) {
            let c = parse(c.as_str().ok_or_else(|| Error::InvalidInput("cofactors must be strings".into()))?, ctx)?;
            r = r.try_sub(&c.try_mul(qi)?)?;
        }
        return Ok(Output {
            result: json!({ "valid": r.is_zero() }),
            residuals: Some(json!({ "exact_remainder": r.to_string() })),
            ..Default::default()
        });
    }
    Ok(match left_ideal_membership(&p, &qs, degree)? {
        LeftIdealResult::Member { cofactors } => Output {
            result: json!({ "member": true, "degree": degree }),
            certificate: Some(json!({ "cofactors": cofactors.iter().map(NcPoly::to_string).collect::<Vec<_>>() })),
            residuals: Some(json!({ "exact_remainder": "0" })),
        },
        LeftIdealResult::NotMemberAtDegree => Output::result(json!({
            "member": false,
            "degree": degree,
            "note": "no representation at this degree; larger degrees are not ruled out",
        })),
        LeftIdealResult::DegreeTooSmall { required } => {
            Output::result(json!({ "member": false, "degree": degree, "degree_too_small": true, "required": required }))
        }
    })
}

fn counterexample_gap(p: &NcPoly, x: &MatrixTuple, y: &MatrixTuple) -> Result<f64, Error> {
    let mid: Vec<_> = x.matrices().iter().zip(y.matrices()).map(|(a, b)| (a + b) * 0.5).collect();
    let mid = MatrixTuple::new(x.kind(), mid)?;
    let gap = (p.evaluate(x)? + p.evaluate(y)?) * 0.5 - p.evaluate(&mid)?;
    Ok(min_eig(&symmetrize(&gap)))
}

fn run_convex(args: &CertIn, seed: u64) -> Result<Output, Error> {
    let ctx = context(&args.input.vars, [args.input.poly.as_str()])?;
    let p = parse(&args.input.poly, ctx)?;
    let hessian = p.hessian();
    if let Some(path) = &args.verify {
        let saved = read_json(path)?;
        if let Some(c) = saved.get("certificate").filter(|c| !c.is_null()) {
            let cert = io::read_sos_certificate(c, hessian.poly().context())?;
            return Ok(verify_sos(hessian.poly(), &cert));
        }
        let ce = saved
            .pointer("/result/counterexample")
            .filter(|c| !c.is_null())
            .ok_or_else(|| Error::InvalidInput("saved run has neither a certificate nor a counterexample".into()))?;
        let x = io::read_tuple(io_field(ce, "X")?, ctx.kind())?;
        let y = io::read_tuple(io_field(ce, "Y")?, ctx.kind())?;
        let e = counterexample_gap(&p, &x, &y)?;
        return Ok(Output::result(json!({ "valid": e < 0.0, "gap_min_eig": e })));
    }
    let r = convexity_check_with(&p, &ConvexityOptions { seed, ..Default::default() })?;
    let counterexample = r
        .counterexample
        .as_ref()
        .map(|c| json!({ "X": io::tuple_to_json(&c.x), "Y": io::tuple_to_json(&c.y), "gap_min_eig": c.min_eig }));
    Ok(Output {
        result: json!({
            "convex": r.convex,
            "reason": r.reason,
            "hessian": r.hessian.to_string(),
            "counterexample": counterexample,
        }),
        residuals: r.certificate.as_ref().map(|c| json!({ "reconstruction": c.residual })),
        certificate: r.certificate.as_ref().map(io::sos_certificate_to_json),
    })
}

fn io_field<'a>(v: &'a Value, key: &str) -> Result<&'a Value, Error> {
    v.get(key).ok_or_else(|| Error::InvalidInput(format!("missing field \"{key}\"")))
}

fn run_derivative(
    input: &PolyIn,
    order: usize,
    x: &Option<PathBuf>,
    h: &Option<PathBuf>,
    sos: bool,
) -> Result<Output, Error> {
    let ctx = context(&input.vars, [input.poly.as_str()])?;
    let p = parse(&input.poly, ctx)?;
    let d = p.directional_derivative(order)?;
    let mut result = json!({ "order": order, "derivative": d.to_string() });
    if let (Some(x), Some(h)) = (x, h) {
        let x = io::read_tuple(&read_json(x)?, ctx.kind())?;
        let h = io::read_tuple(&read_json(h)?, ctx.kind())?;
        result["value"] = io::matrix_to_json(&d.evaluate(&x, &h)?);
    }
    if sos {
        let report = kth_derivative_positivity(&p, order)?;
        result["sos"] = json!(report.sos_feasible);
        result["reason"] = json!(report.reason);
        return Ok(Output {
            result,
            residuals: report.certificate.as_ref().map(|c| json!({ "reconstruction": c.residual })),
            certificate: report.certificate.as_ref().map(io::sos_certificate_to_json),
        });
    }
    Ok(Output::result(result))
}

fn run_eval(poly: &Option<String>, matrix_poly: &Option<PathBuf>, x: &Path, vars: &Vars) -> Result<Output, Error> {
    let kind = if vars.free { VariableKind::Free } else { VariableKind::Symmetric };
    let x = io::read_tuple(&read_json(x)?, kind)?;
    let g = vars.vars.unwrap_or(x.g());
    let ctx = VariableContext::new(g, kind)?;
    let value = match (poly, matrix_poly) {
        (Some(p), None) => parse(p, ctx)?.evaluate(&x)?,
        (None, Some(path)) => {
            let p: MatrixNcPoly = io::read_matrix_poly(&read_json(path)?, ctx)?;
            p.evaluate(&x)?
        }
        _ => return Err(Error::InvalidInput("give exactly one of --poly and --matrix-poly".into())),
    };
    let mut result = json!({ "value": io::matrix_to_json(&value) });
    if value.nrows() == value.ncols() && ncert::linalg::asymmetry(&value) <= 1e-9 * max_abs(&value).max(1.0) {
        result["min_eig"] = json!(min_eig(&symmetrize(&value)));
    }
    Ok(Output::result(result))
}

fn run_dominate(l1: &Path, l2: &Path, verify: &Option<PathBuf>) -> Result<Output, Error> {
    let (a, b) = (read_pencil(l1)?, read_pencil(l2)?);
    if let Some(path) = verify {
        let cert = io::read_domination_certificate(saved_certificate(&read_json(path)?)?)?;
        if cert.v.iter().any(|v| v.shape() != (a.size(), b.size())) {
            return Err(Error::ShapeMismatch(format!("certificate blocks must be {}x{}", a.size(), b.size())));
        }
        let r = cert.residuals(&a, &b);
        return Ok(Output {
            result: json!({ "valid": r.max() <= ncert::domination::CERTIFICATE_TOL, "mu": cert.mu() }),
            residuals: Some(json!({ "isometry": r.isometry, "coefficients": r.coefficients })),
            ..Default::default()
        });
    }
    let r = check_domination(&a, &b)?;
    let witness = r
        .witness
        .as_ref()
        .map(|w| json!({ "X": io::tuple_to_json(&w.x), "l1_min_eig": w.l1_min_eig, "l2_min_eig": w.l2_min_eig }));
    Ok(Output {
        result: json!({
            "status": r.status.as_str(),
            "dominated": r.dominated(),
            "dual": r.dual.as_ref().map(io::separating_functional_to_json),
            "witness": witness,
            "note": r.note,
        }),
        certificate: match (&r.certificate, &r.residuals) {
            (Some(c), Some(res)) => Some(io::domination_certificate_to_json(c, res)),
            _ => None,
        },
        residuals: r.residuals.map(|x| json!({ "isometry": x.isometry, "coefficients": x.coefficients })),
    })
}

fn equivalence_json(e: &Equivalence) -> Value {
    let status = match e {
        Equivalence::Equivalent(_) => "equivalent",
        Equivalence::EquivalentNoWitness => "equivalent by traces, witness construction failed",
        Equivalence::NotEquivalent => "not_equivalent",
    };
    json!({ "equivalent": e.is_equivalent(), "status": status, "U": e.witness().map(io::matrix_to_json) })
}

fn run(cli: &Cli) -> Result<Output, Error> {
    match &cli.verb {
        Verb::Eval { poly, matrix_poly, x, vars } => run_eval(poly, matrix_poly, x, vars),
        Verb::Derivative { input, order, x, h, sos } => run_derivative(input, *order, x, h, *sos),
        Verb::Cyceq { input, other } => {
            let ctx = context(&input.vars, [input.poly.as_str(), other.as_str()])?;
            let eq = cyclically_equivalent(&parse(&input.poly, ctx)?, &parse(other, ctx)?)?;
            Ok(Output::result(json!({ "cyclically_equivalent": eq })))
        }
        Verb::Sos(args) => run_sos(args, false),
        Verb::CycSos(args) => run_sos(args, true),
        Verb::Eigopt(args) => run_eigopt(args),
        Verb::Minimizer { input } => run_minimizer(input),
        Verb::Qm { cert, q, ideal, degree } => run_qm(cert, q, ideal, *degree),
        Verb::Ideal { cert, q, degree } => run_ideal(cert, q, *degree),
        Verb::TraceZero { input } => {
            let ctx = context(&input.vars, [input.poly.as_str()])?;
            Ok(Output::result(json!({ "trace_zero": trace_zero_check(&parse(&input.poly, ctx)?) })))
        }
        Verb::Convex(args) => run_convex(args, cli.seed),
        Verb::Dominate { l1, l2, verify } => run_dominate(l1, l2, verify),
        Verb::Equal { l1, l2 } => {
            let r = sets_equal(&read_pencil(l1)?, &read_pencil(l2)?)?;
            Ok(Output::result(json!({
                "equal": r.equal,
                "forward": r.forward,
                "backward": r.backward,
                "via": r.via,
                "minimal_equivalence": r.minimal_equivalence,
            })))
        }
        Verb::Radius { l } => {
            let r = radius(&read_pencil(l)?)?;
            Ok(Output::result(json!({ "bounded": r.bounded, "rho": r.rho, "bracket": r.bracket })))
        }
        Verb::Cube { l } => {
            let r = matrix_cube(&read_pencil(l)?)?;
            Ok(Output::result(json!({ "beta": r.beta, "infeasible_at": r.infeasible_at })))
        }
        Verb::Minpencil { l } => {
            let l = read_pencil(l)?;
            let m = minimal_defining_pencil(&l)?;
            Ok(Output::result(json!({ "size": m.size(), "original_size": l.size(), "pencil": io::pencil_to_json(&m) })))
        }
        Verb::Uniteq { l1, l2 } => {
            Ok(Output::result(equivalence_json(&unitarily_equivalent(&read_pencil(l1)?, &read_pencil(l2)?)?)))
        }
    }
}

/// 3 for failures of the numerical machinery, 2 for everything the caller
/// can fix.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Solver(_) | Error::DimensionCap { .. } | Error::InternalConsistency(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let outcome = run(&cli);
    let timing_ms = start.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok(out) => {
            let mut doc = json!({ "status": "ok", "result": out.result, "timing_ms": timing_ms });
            if let Some(c) = out.certificate {
                doc["certificate"] = c;
            }
            if let Some(r) = out.residuals {
                doc["residuals"] = r;
            }
            // a closed pipe on stdout is the reader's business
            let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&doc).expect("serializable"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = exit_code(&e);
            let status = if code == 3 { "solver_failure" } else { "input_error" };
            let doc = json!({ "status": status, "error": e.to_string(), "timing_ms": timing_ms });
            let _ = writeln!(std::io::stdout().lock(), "{doc}");
            eprintln!("ncert: {e}");
            ExitCode::from(code)
        }
    }
}
