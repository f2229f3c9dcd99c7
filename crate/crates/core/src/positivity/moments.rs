use std::collections::BTreeMap;

use super::gram::{gram_factors, require_symmetric, ClassKey, GramBlock, GramSystem};
use super::sos::factor_residual;
use super::{SosCertificate, RESIDUAL_TOL};
use crate::error::{Error, Result};
use crate::linalg::{asymmetry, max_abs, min_eig, sym_eigen, symmetrize, Mat, Vector};
use crate::ncpoly::{word_basis, Letter, MatrixTuple, NcPoly, VariableContext, VariableKind, Word};
use crate::rat::{from_f64, to_f64};
use crate::sdp::{face_polish, polish, solve, Block, SdpProblem, SdpStatus, SolverOptions, SparseSym};

const RANK_TOL: f64 = 1e-6;
const GAP_RATIO: f64 = 10.0;
const ASYMMETRY_TOL: f64 = 1e-6;
/// Slack on `L(f) ≤ f* + δ` in the low-rank moment search.
const EXTRACTION_SLACK: f64 = 1e-6;

/// Hankel matrix `M[u,v] = y(u*v)` over the words of degree `≤ order`.
#[derive(Clone, Debug)]
pub struct MomentMatrix {
    pub ctx: VariableContext,
    pub order: usize,
    pub basis: Vec<Word>,
    /// Normalized moments `y(w)` for every word `u*v` of the basis.
    pub moments: BTreeMap<Word, f64>,
    pub matrix: Mat,
    pub rank: usize,
    pub rank_prev: usize,
    pub flat: bool,
    pub rank_ambiguous: bool,
    pub min_eig: f64,
}

/// Numerical rank against `RANK_TOL·σ_max`, and whether the gap at the cut
/// is below `GAP_RATIO`.
fn rank_info(m: &Mat) -> (usize, bool) {
    if m.nrows() == 0 {
        return (0, false);
    }
    let mut s: Vec<f64> = sym_eigen(m).0.iter().map(|v| v.abs()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let smax = s[0];
    if smax == 0.0 {
        return (0, false);
    }
    let r = s.iter().filter(|&&v| v > RANK_TOL * smax).count();
    let ambiguous = r < s.len() && s[r] > 0.0 && s[r - 1] / s[r] < GAP_RATIO;
    (r, ambiguous)
}

impl MomentMatrix {
    /// Builds the moment matrix of order `order` from a moment map. A word
    /// missing from the map falls back to its involution, then to zero. The
    /// map is normalized by `y(∅)`, which must be positive.
    pub fn new(ctx: VariableContext, order: usize, y: &BTreeMap<Word, f64>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput("moment matrix order must be at least 1".into()));
        }
        let kind = ctx.kind();
        let y0 = y.get(&Word::empty()).copied().unwrap_or(0.0);
        if !(y0 > 0.0) {
            return Err(Error::InvalidInput("moment map needs y(∅) > 0".into()));
        }
        let lookup = |w: &Word| y.get(w).or_else(|| y.get(&w.involution(kind))).copied().unwrap_or(0.0) / y0;
        let basis = word_basis(ctx, order);
        let n = basis.len();
        let mut moments = BTreeMap::new();
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let w = Word::star_concat(&basis[i], &basis[j], kind);
                let v = lookup(&w);
                m[(i, j)] = v;
                moments.insert(w, v);
            }
        }
        let m = symmetrize(&m);
        let prev = word_basis(ctx, order - 1).len();
        let (rank, amb) = rank_info(&m);
        let (rank_prev, amb_prev) = rank_info(&m.view((0, 0), (prev, prev)).into_owned());
        Ok(MomentMatrix {
            ctx,
            order,
            basis,
            moments,
            min_eig: min_eig(&m),
            matrix: m,
            rank,
            rank_prev,
            flat: rank == rank_prev,
            rank_ambiguous: amb || amb_prev,
        })
    }

    /// `L(f) = Σ f_w y(w)` for `deg f ≤ 2·order`.
    pub fn apply(&self, f: &NcPoly) -> f64 {
        let kind = self.ctx.kind();
        f.terms()
            .map(|(w, c)| {
                let y = self.moments.get(w).or_else(|| self.moments.get(&w.involution(kind))).copied().unwrap_or(0.0);
                to_f64(c) * y
            })
            .sum()
    }

    fn is_positive(&self) -> bool {
        self.min_eig >= -1e-7 * max_abs(&self.matrix).max(1.0)
    }
}

#[derive(Clone, Debug)]
pub struct Minimizer {
    pub a: MatrixTuple,
    pub v: Vector,
    /// `⟨f(A)v, v⟩`.
    pub value: f64,
}

#[derive(Clone, Debug)]
pub enum MinimizerOutcome {
    Found(Minimizer),
    NotFlat,
    RankAmbiguous,
}

/// GNS construction on a flat moment matrix: `φ(u)` are the rows of
/// `Q√Λ` restricted to the rank, `Aⱼ` maps `φ(u) ↦ φ(xⱼu)` for `u` of degree
/// `< order`, and `v = φ(∅)`.
pub fn extract_minimizer(m: &MomentMatrix, f: &NcPoly) -> Result<MinimizerOutcome> {
    if f.context() != m.ctx {
        return Err(Error::ContextMismatch);
    }
    if m.rank_ambiguous {
        return Ok(MinimizerOutcome::RankAmbiguous);
    }
    if !m.flat || !m.is_positive() || m.rank == 0 {
        return Ok(MinimizerOutcome::NotFlat);
    }
    let r = m.rank;
    let n = m.basis.len();
    let (vals, vecs) = sym_eigen(&m.matrix);
    let mut phi = Mat::zeros(n, r);
    for k in 0..r {
        let col = n - 1 - k;
        let s = vals[col].max(0.0).sqrt();
        phi.set_column(k, &(vecs.column(col) * s));
    }
    let index: BTreeMap<&Word, usize> = m.basis.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let prev: Vec<&Word> = m.basis.iter().filter(|w| w.len() < m.order).collect();
    let z = Mat::from_fn(prev.len(), r, |i, k| phi[(index[prev[i]], k)]);
    let Some(z_pinv) = z.transpose().pseudo_inverse(1e-10).ok() else {
        return Err(Error::Solver("GNS pseudo-inverse failed".into()));
    };
    let symmetric = m.ctx.kind() == VariableKind::Symmetric;
    let mut mats = Vec::with_capacity(m.ctx.g());
    for j in 0..m.ctx.g() {
        let y = Mat::from_fn(prev.len(), r, |i, k| phi[(index[&prev[i].prepend(Letter::new(j, false))], k)]);
        let mut a = y.transpose() * &z_pinv;
        if symmetric {
            if asymmetry(&a) > ASYMMETRY_TOL * max_abs(&a).max(1.0) {
                return Ok(MinimizerOutcome::RankAmbiguous);
            }
            a = symmetrize(&a);
        }
        mats.push(a);
    }
    let v0 = phi.row(index[&Word::empty()]).transpose();
    let v = &v0 / v0.norm();
    let a = MatrixTuple::new(m.ctx.kind(), mats)?;
    let fa = f.evaluate(&a)?;
    let value = (v.transpose() * fa * &v)[(0, 0)];
    Ok(MinimizerOutcome::Found(Minimizer { a, v, value }))
}

#[derive(Clone, Debug)]
pub struct EigenvalueBound {
    pub f_star: f64,
    /// Certificate for `f − f_star`.
    pub certificate: SosCertificate,
    pub moments: MomentMatrix,
}

#[derive(Clone, Debug)]
pub enum EigenvalueResult {
    Bounded(Box<EigenvalueBound>),
    UnboundedBelow { reason: String },
}

impl EigenvalueResult {
    pub fn bound(&self) -> Option<&EigenvalueBound> {
        match self {
            EigenvalueResult::Bounded(b) => Some(b),
            EigenvalueResult::UnboundedBelow { .. } => None,
        }
    }
}

/// `f* = sup {λ : f − λ ∈ Σ²}` over the Gram basis of degree `deg f / 2`.
/// The optimal dual is read as a moment map; when it is not flat, a
/// minimum-trace moment matrix with `L(f) ≤ f* + δ` is searched instead.
pub fn eigenvalue_optimize(f: &NcPoly) -> Result<EigenvalueResult> {
    require_symmetric(f, "eigenvalue_optimize input")?;
    let ctx = f.context();
    let deg = f.degree();
    if deg % 2 == 1 {
        return Ok(EigenvalueResult::UnboundedBelow { reason: "odd degree".into() });
    }
    let d = (deg / 2).max(1);
    let basis = word_basis(ctx, d);
    // the constant term is left free: its multiplier is λ
    let system = GramSystem::new(f, ClassKey::Plain, vec![GramBlock::sos(ctx, basis)], vec![NcPoly::one(ctx)])
        .facial_reduction();
    let rows = system.rows();
    if rows.contradiction.is_some() {
        return Ok(EigenvalueResult::UnboundedBelow {
            reason: "a coefficient class of f cannot be produced by squares".into(),
        });
    }
    let empty = Word::empty();
    let (mut problem, remap) = system.problem(&rows);
    let mut obj = SparseSym::new();
    for (b, i, j, c) in system.contrib.get(&empty).into_iter().flatten() {
        obj.add_functional(remap[*b].expect("nonempty"), *i, *j, to_f64(c));
    }
    problem.set_objective(obj.clone());
    let sol = solve(&problem, &SolverOptions::default())?;
    match sol.status {
        SdpStatus::Optimal => {}
        SdpStatus::PrimalInfeasible => {
            return Ok(EigenvalueResult::UnboundedBelow { reason: "no λ makes f − λ a sum of squares".into() })
        }
        s => return Err(Error::Solver(format!("eigenvalue SDP ended with status {s}"))),
    }
    let mut x = sol.x.clone();
    if problem.max_violation(&x) > 1e-11 {
        polish(&problem, &mut x, 20);
        face_polish(&problem, &mut x);
    }
    let f0 = to_f64(&f.coeff(&empty));
    let f_star = f0 - obj.dot(&x);
    let grams = system.grams(&x, &remap);
    let cbasis = system.blocks[0].basis.clone();
    let shifted = f.try_sub(&NcPoly::constant(ctx, from_f64(f_star)))?;
    let factors = gram_factors(ctx, &cbasis, &grams[0]);
    let residual = factor_residual(&shifted, &factors, false);
    if residual > RESIDUAL_TOL {
        return Err(Error::Solver(format!("eigenvalue certificate residual {residual:.3e} exceeds {RESIDUAL_TOL:e}")));
    }
    let certificate = SosCertificate { basis: cbasis, gram: grams[0].clone(), factors, residual, cyclic: false };

    let mut y = rows.functional(&sol.y);
    y.insert(empty, 1.0);
    let direct = MomentMatrix::new(ctx, d, &y)?;
    let moments = if direct.flat && !direct.rank_ambiguous && direct.is_positive() {
        direct
    } else {
        match low_rank_moments(f, f_star, d)? {
            Some(m) if m.flat || !direct.is_positive() => m,
            _ => direct,
        }
    };
    Ok(EigenvalueResult::Bounded(Box::new(EigenvalueBound { f_star, certificate, moments })))
}

/// `min tr M` over Hankel `M ⪰ 0` with `M[∅,∅] = 1` and `L(f) ≤ f* + δ`.
/// Minimizing the trace favors low rank, hence flat extensions.
fn low_rank_moments(f: &NcPoly, f_star: f64, d: usize) -> Result<Option<MomentMatrix>> {
    let ctx = f.context();
    let kind = ctx.kind();
    let basis = word_basis(ctx, d);
    let n = basis.len();
    let mut groups: BTreeMap<Word, Vec<(usize, usize)>> = BTreeMap::new();
    for i in 0..n {
        for j in i..n {
            let key = ClassKey::Plain.key(&Word::star_concat(&basis[i], &basis[j], kind), ctx);
            groups.entry(key).or_default().push((i, j));
        }
    }
    let mut p = SdpProblem::new(vec![Block::psd(n), Block::lp(1)]);
    let mut unit = SparseSym::new();
    unit.add_functional(0, 0, 0, 1.0);
    p.add_constraint(unit, 1.0);
    for list in groups.values() {
        let (i0, j0) = list[0];
        for &(i, j) in &list[1..] {
            let mut a = SparseSym::new();
            a.add_functional(0, i0, j0, 1.0);
            a.add_functional(0, i, j, -1.0);
            p.add_constraint(a, 0.0);
        }
    }
    let mut lf = SparseSym::new();
    for (w, c) in f.terms() {
        let (i, j) = groups[&ClassKey::Plain.key(w, ctx)][0];
        lf.add_functional(0, i, j, to_f64(c));
    }
    lf.add_functional(1, 0, 0, 1.0);
    p.add_constraint(lf, f_star + EXTRACTION_SLACK);
    let mut tr = SparseSym::new();
    for i in 0..n {
        tr.add_functional(0, i, i, 1.0);
    }
    p.set_objective(tr);
    let sol = solve(&p, &SolverOptions::default())?;
    if sol.status != SdpStatus::Optimal {
        log::debug!("low-rank moment search ended with {}", sol.status);
        return Ok(None);
    }
    let m = sol.x[0].to_dense();
    let y: BTreeMap<Word, f64> = groups
        .iter()
        .map(|(k, list)| (k.clone(), list.iter().map(|&(i, j)| m[(i, j)]).sum::<f64>() / list.len() as f64))
        .collect();
    Ok(Some(MomentMatrix::new(ctx, d, &y)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpoly::parse;

    fn sym(g: usize, s: &str) -> NcPoly {
        parse(s, VariableContext::symmetric(g)).unwrap()
    }

    fn free(g: usize, s: &str) -> NcPoly {
        parse(s, VariableContext::free(g)).unwrap()
    }

    fn bounded(f: &NcPoly) -> EigenvalueBound {
        match eigenvalue_optimize(f).unwrap() {
            EigenvalueResult::Bounded(b) => *b,
            EigenvalueResult::UnboundedBelow { reason } => panic!("unexpected unbounded: {reason}"),
        }
    }

    fn found(m: &MomentMatrix, f: &NcPoly) -> Minimizer {
        match extract_minimizer(m, f).unwrap() {
            MinimizerOutcome::Found(x) => x,
            other => panic!("no minimizer: {other:?} (ranks {} / {})", m.rank, m.rank_prev),
        }
    }

    #[test]
    fn square_has_zero_minimum() {
        let f = sym(1, "x^2");
        let b = bounded(&f);
        assert!(b.f_star.abs() < 1e-6);
        let m = found(&b.moments, &f);
        assert!((m.value - b.f_star).abs() < 1e-5);
    }

    #[test]
    fn shifted_square_free() {
        let f = free(1, "(1 - x)'*(1 - x)");
        let b = bounded(&f);
        assert!(b.f_star.abs() < 1e-6, "f* = {}", b.f_star);
        let m = found(&b.moments, &f);
        assert!((m.value - b.f_star).abs() < 1e-5);
        assert_eq!(m.a.n(), 1);
        assert!((m.a.matrices()[0][(0, 0)] - 1.0).abs() < 1e-2);
        assert!((m.v.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn double_well() {
        let f = sym(1, "x^4 - 2*x^2");
        let b = bounded(&f);
        assert!((b.f_star + 1.0).abs() < 1e-6, "f* = {}", b.f_star);
        assert!(b.moments.flat);
        let m = found(&b.moments, &f);
        assert!((m.value + 1.0).abs() < 1e-5);
        let a = &m.a.matrices()[0];
        let sq = a * a - Mat::identity(a.nrows(), a.nrows());
        assert!(max_abs(&sq) < 1e-4, "A^2 - I = {sq}");
    }

    #[test]
    fn unbounded_inputs() {
        assert!(matches!(eigenvalue_optimize(&sym(1, "x^3")).unwrap(), EigenvalueResult::UnboundedBelow { .. }));
        assert!(matches!(eigenvalue_optimize(&free(1, "x + x'")).unwrap(), EigenvalueResult::UnboundedBelow { .. }));
        assert!(matches!(
            eigenvalue_optimize(&free(1, "x'*x - x*x'")).unwrap(),
            EigenvalueResult::UnboundedBelow { .. }
        ));
    }

    #[test]
    fn truncated_moments_not_flat() {
        let ctx = VariableContext::symmetric(1);
        let w = |k: usize| Word::from_vars(&vec![0; k]);
        let mut y = BTreeMap::new();
        for (k, v) in [(0, 1.0), (1, 0.0), (2, 1.0), (3, 0.0), (4, 5.0)] {
            y.insert(w(k), v);
        }
        let m = MomentMatrix::new(ctx, 2, &y).unwrap();
        assert!(!m.flat);
        assert!(matches!(extract_minimizer(&m, &sym(1, "x^2")).unwrap(), MinimizerOutcome::NotFlat));
    }
}
