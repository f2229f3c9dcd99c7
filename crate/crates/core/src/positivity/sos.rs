use std::collections::BTreeMap;

use num_traits::Signed;

use super::gram::{gram_factors, require_symmetric, ClassKey, GramBlock, GramSystem, Rows};
use super::{DualFunctional, Infeasibility, SosCertificate, SosOutcome, RESIDUAL_TOL};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::ncpoly::{canonical_rotation, word_basis, NcPoly, Word};
use crate::rat::to_f64;
use crate::sdp::{face_polish, feasibility, polish, Ray, SdpStatus, SolverOptions};

pub(crate) enum GramSolve {
    Feasible { system: GramSystem, grams: Vec<Mat> },
    Infeasible(Infeasibility),
}

fn functional_value(system: &GramSystem, values: &BTreeMap<Word, f64>) -> f64 {
    system.target.iter().map(|(k, c)| values.get(k).copied().unwrap_or(0.0) * to_f64(c)).sum()
}

/// Feasibility of a Gram system after diagonal facial reduction.
pub(crate) fn solve_gram(system: GramSystem) -> Result<GramSolve> {
    let system = system.facial_reduction();
    let rows: Rows = system.rows();
    if let Some(r) = &rows.contradiction {
        let sign = if r.rhs.is_positive() { 1.0 } else { -1.0 };
        let values: BTreeMap<Word, f64> = r.combo.iter().map(|(k, c)| (k.clone(), -sign * to_f64(c))).collect();
        let value = functional_value(&system, &values);
        return Ok(GramSolve::Infeasible(Infeasibility {
            reason: "a coefficient class cannot be produced once forced-zero basis words are removed".into(),
            dual: Some(DualFunctional { values, value, residual: 0.0 }),
        }));
    }
    let (problem, remap) = system.problem(&rows);
    if problem.num_constraints() == 0 {
        let grams = system.blocks.iter().map(|b| Mat::zeros(b.basis.len(), b.basis.len())).collect();
        return Ok(GramSolve::Feasible { system, grams });
    }
    let sol = feasibility(&problem, &SolverOptions::default())?;
    match sol.status {
        SdpStatus::Optimal => {
            let mut x = sol.x;
            if problem.max_violation(&x) > 1e-11 {
                polish(&problem, &mut x, 20);
                face_polish(&problem, &mut x);
            }
            let grams = system.grams(&x, &remap);
            Ok(GramSolve::Feasible { system, grams })
        }
        SdpStatus::PrimalInfeasible => {
            let dual = match sol.ray {
                Some(Ray::Primal { y, residual }) => {
                    let values = rows.functional(&y);
                    let value = functional_value(&system, &values);
                    Some(DualFunctional { values, value, residual })
                }
                _ => None,
            };
            Ok(GramSolve::Infeasible(Infeasibility { reason: "Gram system infeasible".into(), dual }))
        }
        s => Err(Error::Solver(format!("Gram feasibility SDP ended with status {s}"))),
    }
}

fn f64_terms(p: &NcPoly) -> Vec<(Word, f64)> {
    p.terms().map(|(w, c)| (w.clone(), to_f64(c))).collect()
}

/// Max coefficient of `p − Σ hⱼ*hⱼ`, reduced over rotation classes when
/// `cyclic`. Computed in floating point from the factors alone.
pub(crate) fn factor_residual(p: &NcPoly, factors: &[NcPoly], cyclic: bool) -> f64 {
    let kind = p.context().kind();
    let key = |w: Word| if cyclic { canonical_rotation(&w) } else { w };
    let mut acc: BTreeMap<Word, f64> = BTreeMap::new();
    for (w, c) in f64_terms(p) {
        *acc.entry(key(w)).or_insert(0.0) += c;
    }
    for h in factors {
        let t = f64_terms(h);
        let stars: Vec<(Word, f64)> = t.iter().map(|(w, c)| (w.involution(kind), *c)).collect();
        for (u, a) in &stars {
            for (v, b) in &t {
                *acc.entry(key(u.concat(v))).or_insert(0.0) -= a * b;
            }
        }
    }
    acc.values().fold(0.0, |m, v| m.max(v.abs()))
}

/// SOS test of `p` over a given Gram basis with a given coefficient grouping.
pub(crate) fn gram_sos(p: &NcPoly, basis: Vec<Word>, class: ClassKey) -> Result<SosOutcome> {
    let ctx = p.context();
    let cyclic = class == ClassKey::Cyclic;
    if p.is_zero() {
        let n = basis.len();
        return Ok(SosOutcome::Certificate(SosCertificate {
            basis,
            gram: Mat::zeros(n, n),
            factors: Vec::new(),
            residual: 0.0,
            cyclic,
        }));
    }
    let system = GramSystem::new(p, class, vec![GramBlock::sos(ctx, basis)], Vec::new());
    match solve_gram(system)? {
        GramSolve::Infeasible(inf) => Ok(SosOutcome::Infeasible(inf)),
        GramSolve::Feasible { system, mut grams } => {
            let basis = system.blocks[0].basis.clone();
            let gram = grams.swap_remove(0);
            let factors = gram_factors(ctx, &basis, &gram);
            let residual = factor_residual(p, &factors, cyclic);
            if residual > RESIDUAL_TOL {
                return Err(Error::Solver(format!(
                    "SOS reconstruction residual {residual:.3e} exceeds {RESIDUAL_TOL:e}"
                )));
            }
            Ok(SosOutcome::Certificate(SosCertificate { basis, gram, factors, residual, cyclic }))
        }
    }
}

fn odd_degree() -> SosOutcome {
    SosOutcome::Infeasible(Infeasibility { reason: "odd degree".into(), dual: None })
}

/// Gram-matrix SOS test over all words of degree `≤ deg p / 2`.
pub fn sos_decompose(p: &NcPoly) -> Result<SosOutcome> {
    require_symmetric(p, "sos_decompose input")?;
    let deg = p.degree();
    if deg % 2 == 1 {
        return Ok(odd_degree());
    }
    gram_sos(p, word_basis(p.context(), deg / 2), ClassKey::Plain)
}

/// SOS up to a sum of commutators: coefficients are matched per cyclic class.
pub fn cyclic_sos_decompose(p: &NcPoly) -> Result<SosOutcome> {
    require_symmetric(p, "cyclic_sos_decompose input")?;
    let deg = p.degree();
    if deg % 2 == 1 {
        return Ok(odd_degree());
    }
    gram_sos(p, word_basis(p.context(), deg / 2), ClassKey::Cyclic)
}

/// `p` is a sum of commutators, i.e. `tr p(X) = 0` for every tuple.
pub fn trace_zero_check(p: &NcPoly) -> bool {
    p.cyclic_reduce().is_zero()
}
