//! Sums of squares, eigenvalue optimization with minimizer extraction,
//! quadratic-module and left-ideal membership, trace positivity and matrix
//! convexity.

mod convex;
mod gram;
mod membership;
mod moments;
mod sos;

use std::collections::BTreeMap;

use crate::linalg::Mat;
use crate::ncpoly::{NcPoly, Word};

pub use convex::{
    convexity_check, convexity_check_with, kth_derivative_positivity, ConvexityCounterexample, ConvexityOptions,
    ConvexityResult, DerivativeReport,
};
pub use membership::{
    left_ideal_membership, qm_membership, qm_membership_with_ideal, GramPart, LeftIdealResult, QmCertificate, QmResult,
};
pub use moments::{
    eigenvalue_optimize, extract_minimizer, EigenvalueBound, EigenvalueResult, Minimizer, MinimizerOutcome,
    MomentMatrix,
};
pub use sos::{cyclic_sos_decompose, sos_decompose, trace_zero_check};

/// Reconstruction tolerance for certificates.
pub const RESIDUAL_TOL: f64 = 1e-7;

/// `p = Σ hⱼ* hⱼ` (or, for `cyclic`, equal up to a sum of commutators) with
/// `G = Σ vⱼvⱼᵀ` read against `basis`.
#[derive(Clone, Debug)]
pub struct SosCertificate {
    pub basis: Vec<Word>,
    pub gram: Mat,
    pub factors: Vec<NcPoly>,
    /// Max coefficient of `p − Σ hⱼ*hⱼ` (after cyclic reduction when `cyclic`).
    pub residual: f64,
    pub cyclic: bool,
}

impl SosCertificate {
    /// Recomputes the reconstruction residual against `p` from the factors.
    pub fn verify(&self, p: &NcPoly) -> f64 {
        sos::factor_residual(p, &self.factors, self.cyclic)
    }

    pub fn gram_min_eig(&self) -> f64 {
        crate::linalg::min_eig(&self.gram)
    }
}

/// A linear functional separating the target from the cone it was tested
/// against: `L(p) < 0` while `L ≥ 0` on the cone (at the basis degree).
#[derive(Clone, Debug)]
pub struct DualFunctional {
    /// Values on class representatives.
    pub values: BTreeMap<Word, f64>,
    /// `L(p)`.
    pub value: f64,
    /// Ray residual reported by the solver.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct Infeasibility {
    pub reason: String,
    pub dual: Option<DualFunctional>,
}

#[derive(Clone, Debug)]
pub enum SosOutcome {
    Certificate(SosCertificate),
    Infeasible(Infeasibility),
}

impl SosOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, SosOutcome::Certificate(_))
    }

    pub fn certificate(&self) -> Option<&SosCertificate> {
        match self {
            SosOutcome::Certificate(c) => Some(c),
            SosOutcome::Infeasible(_) => None,
        }
    }
}
