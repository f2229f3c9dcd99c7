use std::collections::BTreeMap;

use num_traits::Zero;

use super::gram::{require_symmetric, ClassKey, GramBlock, GramSystem};
use super::sos::{solve_gram, GramSolve};
use super::{DualFunctional, RESIDUAL_TOL};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::ncpoly::{word_basis, NcPoly, Word};
use crate::rat::{rat, solve, to_f64, Rat};

/// One Gram block `Σ G[u,v] u* q v` of a quadratic-module certificate.
#[derive(Clone, Debug)]
pub struct GramPart {
    pub basis: Vec<Word>,
    pub weight: NcPoly,
    pub gram: Mat,
}

#[derive(Clone, Debug)]
pub struct QmCertificate {
    pub sigma0: GramPart,
    pub localizing: Vec<GramPart>,
    /// Ideal elements `a·r·b` with their (least-squares) multipliers.
    pub ideal_terms: Vec<(NcPoly, f64)>,
    pub residual: f64,
}

impl GramPart {
    /// Adds `Σ G[u,v] u* weight v` into `acc`.
    fn accumulate(&self, acc: &mut BTreeMap<Word, f64>) {
        let kind = self.weight.context().kind();
        for (i, u) in self.basis.iter().enumerate() {
            let us = u.involution(kind);
            for (j, v) in self.basis.iter().enumerate() {
                let g = self.gram[(i, j)];
                if g == 0.0 {
                    continue;
                }
                for (w, c) in self.weight.terms() {
                    *acc.entry(us.concat(w).concat(v)).or_insert(0.0) += g * to_f64(c);
                }
            }
        }
    }
}

impl QmCertificate {
    /// Max coefficient of `p − σ₀ − Σ localizing − Σ ideal terms`, recomputed
    /// from the stored blocks.
    pub fn verify(&self, p: &NcPoly) -> f64 {
        let mut acc: BTreeMap<Word, f64> = BTreeMap::new();
        for part in std::iter::once(&self.sigma0).chain(&self.localizing) {
            part.accumulate(&mut acc);
        }
        for (t, z) in &self.ideal_terms {
            for (w, c) in t.terms() {
                *acc.entry(w.clone()).or_insert(0.0) += z * to_f64(c);
            }
        }
        for (w, c) in p.terms() {
            *acc.entry(w.clone()).or_insert(0.0) -= to_f64(c);
        }
        acc.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Smallest eigenvalue over all Gram blocks.
    pub fn min_gram_eig(&self) -> f64 {
        std::iter::once(&self.sigma0)
            .chain(&self.localizing)
            .filter(|b| !b.basis.is_empty())
            .map(|b| crate::linalg::min_eig(&b.gram))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug)]
pub enum QmResult {
    Member(Box<QmCertificate>),
    /// No certificate with the given degree budget; says nothing about
    /// larger budgets.
    NotMemberAtDegree {
        degree: usize,
        dual: Option<DualFunctional>,
    },
    DegreeTooSmall {
        required: usize,
    },
}

fn check_contexts(p: &NcPoly, q: &[NcPoly]) -> Result<()> {
    if q.iter().any(|qi| qi.context() != p.context()) {
        return Err(Error::ContextMismatch);
    }
    Ok(())
}

/// `p ∈ Σ² + Σᵢ Σⱼ fᵢⱼ* qᵢ fᵢⱼ` with `σ₀` over words of degree `≤ d` and the
/// `fᵢⱼ` over words of degree `≤ d − ⌈deg qᵢ/2⌉`.
pub fn qm_membership(p: &NcPoly, q: &[NcPoly], d: usize) -> Result<QmResult> {
    qm_membership_with_ideal(p, q, &[], d)
}

/// As [`qm_membership`], modulo the two-sided ideal generated by `ideal`:
/// every `a·r·b` with `deg a + deg r + deg b ≤ 2d` enters with a free
/// multiplier.
pub fn qm_membership_with_ideal(p: &NcPoly, q: &[NcPoly], ideal: &[NcPoly], d: usize) -> Result<QmResult> {
    check_contexts(p, q)?;
    check_contexts(p, ideal)?;
    require_symmetric(p, "qm_membership target")?;
    for qi in q {
        require_symmetric(qi, "quadratic module generator")?;
    }
    let required = q.iter().map(|qi| qi.degree().div_ceil(2)).chain([p.degree().div_ceil(2)]).max().unwrap_or(0);
    let ideal_required = ideal.iter().map(|r| r.degree().div_ceil(2)).max().unwrap_or(0);
    let required = required.max(ideal_required);
    if d < required {
        return Ok(QmResult::DegreeTooSmall { required });
    }
    let ctx = p.context();
    let mut blocks = vec![GramBlock::sos(ctx, word_basis(ctx, d))];
    for qi in q {
        blocks.push(GramBlock { basis: word_basis(ctx, d - qi.degree().div_ceil(2)), weight: qi.clone() });
    }
    let mut free_terms = Vec::new();
    for r in ideal.iter().filter(|r| !r.is_zero()) {
        let budget = 2 * d - r.degree();
        let words = word_basis(ctx, budget);
        for a in &words {
            for b in words.iter().filter(|b| a.len() + b.len() <= budget) {
                let left = NcPoly::monomial(ctx, a.clone(), rat(1));
                let right = NcPoly::monomial(ctx, b.clone(), rat(1));
                free_terms.push(left.try_mul(r)?.try_mul(&right)?);
            }
        }
    }
    let class = if free_terms.is_empty() { ClassKey::Plain } else { ClassKey::Word };
    let system = GramSystem::new(p, class, blocks, free_terms);
    match solve_gram(system)? {
        GramSolve::Infeasible(inf) => Ok(QmResult::NotMemberAtDegree { degree: d, dual: inf.dual }),
        GramSolve::Feasible { system, grams } => {
            let (residual, z) = system.residual(&grams);
            if residual > RESIDUAL_TOL {
                return Err(Error::Solver(format!(
                    "QM reconstruction residual {residual:.3e} exceeds {RESIDUAL_TOL:e}"
                )));
            }
            let mut parts = system.blocks.iter().zip(grams).map(|(b, g)| GramPart {
                basis: b.basis.clone(),
                weight: b.weight.clone(),
                gram: g,
            });
            let sigma0 = parts.next().expect("sigma0 block");
            Ok(QmResult::Member(Box::new(QmCertificate {
                sigma0,
                localizing: parts.collect(),
                ideal_terms: system.free_terms.iter().cloned().zip(z).filter(|(_, c)| *c != 0.0).collect(),
                residual,
            })))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LeftIdealResult {
    /// `p = Σ rᵢ qᵢ`.
    Member {
        cofactors: Vec<NcPoly>,
    },
    NotMemberAtDegree,
    DegreeTooSmall {
        required: usize,
    },
}

/// Exact solve of `p = Σ rᵢ qᵢ` with `deg rᵢ ≤ d − deg qᵢ`.
pub fn left_ideal_membership(p: &NcPoly, q: &[NcPoly], d: usize) -> Result<LeftIdealResult> {
    check_contexts(p, q)?;
    if p.degree() > d {
        return Ok(LeftIdealResult::DegreeTooSmall { required: p.degree() });
    }
    let ctx = p.context();
    // unknowns: coefficient of word u in rᵢ
    let mut unknowns: Vec<(usize, Word)> = Vec::new();
    for (i, qi) in q.iter().enumerate() {
        if qi.is_zero() || qi.degree() > d {
            continue;
        }
        unknowns.extend(word_basis(ctx, d - qi.degree()).into_iter().map(|u| (i, u)));
    }
    let mut row_of: BTreeMap<Word, usize> = BTreeMap::new();
    let mut columns: Vec<Vec<(usize, Rat)>> = Vec::with_capacity(unknowns.len());
    for (i, u) in &unknowns {
        let mut col = Vec::new();
        for (w, c) in q[*i].terms() {
            let next = row_of.len();
            let r = *row_of.entry(u.concat(w)).or_insert(next);
            col.push((r, c.clone()));
        }
        columns.push(col);
    }
    for (w, _) in p.terms() {
        let next = row_of.len();
        row_of.entry(w.clone()).or_insert(next);
    }
    let m = row_of.len();
    let mut rows = vec![vec![Rat::zero(); unknowns.len()]; m];
    for (k, col) in columns.iter().enumerate() {
        for (r, c) in col {
            rows[*r][k] += c;
        }
    }
    let mut b = vec![Rat::zero(); m];
    for (w, c) in p.terms() {
        b[row_of[w]] = c.clone();
    }
    let Some(x) = solve(&rows, &b, unknowns.len()) else {
        return Ok(LeftIdealResult::NotMemberAtDegree);
    };
    let mut cofactors = vec![NcPoly::zero(ctx); q.len()];
    for ((i, u), c) in unknowns.into_iter().zip(x) {
        if !c.is_zero() {
            cofactors[i].add_term(u, c);
        }
    }
    Ok(LeftIdealResult::Member { cofactors })
}
