use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gram::{require_symmetric, ClassKey};
use super::sos::{gram_sos, sos_decompose};
use super::{SosCertificate, SosOutcome};
use crate::error::{Error, Result};
use crate::linalg::{max_abs, min_eig, random_matrix, random_symmetric, Mat};
use crate::ncpoly::{word_basis, BiPoly, MatrixTuple, NcPoly, VariableKind, Word};
use crate::rat::{is_psd, RatMatrix};

#[derive(Clone, Debug)]
pub struct ConvexityOptions {
    pub seed: u64,
    /// Random `(X, Y)` pairs tried when searching for a counterexample.
    pub max_trials: usize,
}

impl Default for ConvexityOptions {
    fn default() -> Self {
        Self { seed: 0, max_trials: 10_000 }
    }
}

/// `(p(X) + p(Y))/2 − p((X+Y)/2)` has the negative eigenvalue `min_eig`.
#[derive(Clone, Debug)]
pub struct ConvexityCounterexample {
    pub x: MatrixTuple,
    pub y: MatrixTuple,
    pub gap: Mat,
    pub min_eig: f64,
}

#[derive(Clone, Debug)]
pub struct ConvexityResult {
    pub convex: bool,
    pub reason: String,
    pub hessian: BiPoly,
    /// SOS certificate of the Hessian over words linear in `h`.
    pub certificate: Option<SosCertificate>,
    pub counterexample: Option<ConvexityCounterexample>,
}

pub fn convexity_check(p: &NcPoly) -> Result<ConvexityResult> {
    convexity_check_with(p, &ConvexityOptions::default())
}

/// Quadratic form of a Hessian in the `h` letters: `Q[a,b]` is the
/// coefficient of `a* b`.
fn hessian_form(hess: &BiPoly) -> RatMatrix {
    let ctx = hess.poly().context();
    let kind = ctx.kind();
    let letters: Vec<Word> =
        ctx.alphabet().into_iter().filter(|&l| hess.is_h_letter(l)).map(|l| Word::new(vec![l])).collect();
    let n = letters.len();
    let mut q = RatMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            q[(i, j)] = hess.poly().coeff(&Word::star_concat(&letters[i], &letters[j], kind));
        }
    }
    q
}

/// Gram basis for the Hessian: words of degree `≤ deg/2` with exactly one
/// `h` letter.
fn linear_in_h_basis(hess: &BiPoly) -> Vec<Word> {
    let deg = hess.poly().degree();
    word_basis(hess.poly().context(), deg / 2).into_iter().filter(|w| hess.h_degree(w) == 1).collect()
}

fn random_tuple(kind: VariableKind, g: usize, n: usize, scale: f64, rng: &mut ChaCha8Rng) -> Result<MatrixTuple> {
    let mats = (0..g)
        .map(|_| match kind {
            VariableKind::Symmetric => random_symmetric(n, scale, rng),
            VariableKind::Free => random_matrix(n, scale, rng),
        })
        .collect();
    MatrixTuple::new(kind, mats)
}

fn midpoint_gap(p: &NcPoly, x: &MatrixTuple, y: &MatrixTuple) -> Result<Mat> {
    let kind = x.kind();
    let mid: Vec<Mat> = x.matrices().iter().zip(y.matrices()).map(|(a, b)| (a + b) * 0.5).collect();
    let mid = MatrixTuple::new(kind, mid)?;
    Ok((p.evaluate(x)? + p.evaluate(y)?) * 0.5 - p.evaluate(&mid)?)
}

fn search_counterexample(p: &NcPoly, opts: &ConvexityOptions) -> Result<Option<ConvexityCounterexample>> {
    let ctx = p.context();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for trial in 0..opts.max_trials {
        let n = 1 + trial % 3;
        let scale = [1.0, 3.0, 0.3][(trial / 3) % 3] * rng.random_range(0.5..1.5);
        let x = random_tuple(ctx.kind(), ctx.g(), n, scale, &mut rng)?;
        let y = random_tuple(ctx.kind(), ctx.g(), n, scale, &mut rng)?;
        let gap = midpoint_gap(p, &x, &y)?;
        let e = min_eig(&crate::linalg::symmetrize(&gap));
        if e < -1e-9 * (1.0 + max_abs(&gap)) {
            return Ok(Some(ConvexityCounterexample { x, y, gap, min_eig: e }));
        }
    }
    Ok(None)
}

/// Matrix convexity by two independent routes that must agree: the degree
/// criterion with an exact PSD test of the Hessian form for `deg p ≤ 2`, and
/// an SOS test of the Hessian over words linear in `h`.
pub fn convexity_check_with(p: &NcPoly, opts: &ConvexityOptions) -> Result<ConvexityResult> {
    require_symmetric(p, "convexity_check input")?;
    let hessian = p.hessian();
    let deg = p.degree();
    let theorem = deg <= 2 && is_psd(&hessian_form(&hessian));
    let cert = if hessian.poly().degree() % 2 == 1 {
        SosOutcome::Infeasible(super::Infeasibility { reason: "odd degree".into(), dual: None })
    } else {
        gram_sos(hessian.poly(), linear_in_h_basis(&hessian), ClassKey::Plain)?
    };
    if theorem != cert.is_feasible() {
        return Err(Error::InternalConsistency(format!(
            "convexity paths disagree for {p}: degree/form test says {theorem}, Hessian SOS says {}",
            cert.is_feasible()
        )));
    }
    let reason = match (theorem, deg > 2) {
        (true, _) => "Hessian is a sum of squares linear in h".to_string(),
        (false, true) => format!("degree {deg} exceeds 2"),
        (false, false) => "Hessian quadratic form is not positive semidefinite".to_string(),
    };
    let counterexample = if theorem { None } else { search_counterexample(p, opts)? };
    let certificate = match cert {
        SosOutcome::Certificate(c) => Some(c),
        SosOutcome::Infeasible(_) => None,
    };
    Ok(ConvexityResult { convex: theorem, reason, hessian, certificate, counterexample })
}

#[derive(Clone, Debug)]
pub struct DerivativeReport {
    pub k: usize,
    pub degree: usize,
    pub derivative: BiPoly,
    pub sos_feasible: bool,
    pub certificate: Option<SosCertificate>,
    pub reason: String,
}

/// SOS test of `p⁽ᵏ⁾(x)[h]`. A certificate when `deg p > k` contradicts the
/// degree bound for polynomials with positive k-th derivative and is
/// reported as an internal-consistency failure.
pub fn kth_derivative_positivity(p: &NcPoly, k: usize) -> Result<DerivativeReport> {
    require_symmetric(p, "kth_derivative_positivity input")?;
    let derivative = p.directional_derivative(k)?;
    let outcome = sos_decompose(derivative.poly())?;
    let degree = p.degree();
    let (sos_feasible, certificate, why) = match outcome {
        SosOutcome::Certificate(c) => (true, Some(c), "derivative is a sum of squares".to_string()),
        SosOutcome::Infeasible(inf) => (false, None, format!("derivative is not a sum of squares ({})", inf.reason)),
    };
    if sos_feasible && degree > k {
        return Err(Error::InternalConsistency(format!(
            "derivative of order {k} certified positive for a polynomial of degree {degree}"
        )));
    }
    let reason = if degree > k { format!("{why}; consistent with degree {degree} > {k}") } else { why };
    Ok(DerivativeReport { k, degree, derivative, sos_feasible, certificate, reason })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpoly::{parse, VariableContext};

    fn sym(g: usize, s: &str) -> NcPoly {
        parse(s, VariableContext::symmetric(g)).unwrap()
    }

    fn free(g: usize, s: &str) -> NcPoly {
        parse(s, VariableContext::free(g)).unwrap()
    }

    #[test]
    fn square_is_convex() {
        let r = convexity_check(&sym(1, "x^2")).unwrap();
        assert!(r.convex && r.certificate.is_some() && r.counterexample.is_none());
        assert!(convexity_check(&free(2, "x1'*x1 + x2*x2' + x1 + x1'")).unwrap().convex);
        assert!(convexity_check(&sym(2, "(x + y)^2")).unwrap().convex);
    }

    #[test]
    fn quartic_not_convex() {
        let r = convexity_check(&sym(1, "x^4")).unwrap();
        assert!(!r.convex);
        let ce = r.counterexample.expect("counterexample");
        assert!(ce.min_eig < 0.0);
        assert!(min_eig(&midpoint_gap(&sym(1, "x^4"), &ce.x, &ce.y).unwrap()) < 0.0);
    }

    #[test]
    fn affine_and_concave() {
        assert!(convexity_check(&sym(2, "3*x - y + 1")).unwrap().convex);
        let r = convexity_check(&sym(1, "-x^2")).unwrap();
        assert!(!r.convex);
        assert!(r.counterexample.is_some());
        assert!(!convexity_check(&sym(2, "x*y + y*x")).unwrap().convex);
    }

    #[test]
    fn derivative_reports() {
        let r = kth_derivative_positivity(&sym(1, "x^3"), 3).unwrap();
        assert!(!r.sos_feasible);
        let r = kth_derivative_positivity(&sym(1, "x^4"), 2).unwrap();
        assert!(!r.sos_feasible);
        let r = kth_derivative_positivity(&sym(1, "x^2"), 2).unwrap();
        assert!(r.sos_feasible);
    }
}
