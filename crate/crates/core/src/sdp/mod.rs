//! Dense primal-dual interior point solver for block-diagonal SDPs in
//! standard form
//!
//! ```text
//! min ⟨C, X⟩  s.t.  ⟨Aᵢ, X⟩ = bᵢ,  X ⪰ 0
//! max bᵀy     s.t.  Σ yᵢAᵢ + S = C,  S ⪰ 0
//! ```
//!
//! where `X` is block diagonal with PSD blocks and nonnegative diagonal (LP)
//! blocks.

mod export;
mod polish;
mod problem;
mod solver;

pub use export::write_sdpa;
pub use polish::{face_polish, polish};
pub use problem::{Block, BlockKind, SdpProblem, SparseSym};
pub use solver::{dimension_cap, feasibility, solve, Ray, SdpSolution, SdpStatus, SolverOptions, RAY_TOL};

use crate::linalg::{min_eig, Mat, Vector};

/// Value of one diagonal block of a primal or dual matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockValue {
    Dense(Mat),
    Diag(Vector),
}

impl BlockValue {
    pub fn zeros(block: Block) -> Self {
        match block.kind {
            BlockKind::Psd => BlockValue::Dense(Mat::zeros(block.size, block.size)),
            BlockKind::Lp => BlockValue::Diag(Vector::zeros(block.size)),
        }
    }

    pub fn identity(block: Block, scale: f64) -> Self {
        match block.kind {
            BlockKind::Psd => BlockValue::Dense(Mat::identity(block.size, block.size) * scale),
            BlockKind::Lp => BlockValue::Diag(Vector::from_element(block.size, scale)),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            BlockValue::Dense(m) => m.nrows(),
            BlockValue::Diag(v) => v.len(),
        }
    }

    /// Dense matrix view (LP blocks become diagonal matrices).
    pub fn to_dense(&self) -> Mat {
        match self {
            BlockValue::Dense(m) => m.clone(),
            BlockValue::Diag(v) => Mat::from_diagonal(v),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            BlockValue::Dense(m) => m[(i, j)],
            BlockValue::Diag(v) => {
                if i == j {
                    v[i]
                } else {
                    0.0
                }
            }
        }
    }

    pub fn dot(&self, other: &BlockValue) -> f64 {
        match (self, other) {
            (BlockValue::Dense(a), BlockValue::Dense(b)) => a.dot(b),
            (BlockValue::Diag(a), BlockValue::Diag(b)) => a.dot(b),
            _ => panic!("block kinds differ"),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            BlockValue::Dense(m) => m.norm(),
            BlockValue::Diag(v) => v.norm(),
        }
    }

    pub fn min_eig(&self) -> f64 {
        match self {
            BlockValue::Dense(m) => min_eig(m),
            BlockValue::Diag(v) => v.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &BlockValue) {
        match (self, other) {
            (BlockValue::Dense(x), BlockValue::Dense(y)) => *x += y * a,
            (BlockValue::Diag(x), BlockValue::Diag(y)) => *x += y * a,
            _ => panic!("block kinds differ"),
        }
    }

    pub fn scaled(&self, a: f64) -> BlockValue {
        match self {
            BlockValue::Dense(m) => BlockValue::Dense(m * a),
            BlockValue::Diag(v) => BlockValue::Diag(v * a),
        }
    }
}

pub(crate) fn blocks_dot(a: &[BlockValue], b: &[BlockValue]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

pub(crate) fn blocks_norm(a: &[BlockValue]) -> f64 {
    a.iter().map(|x| x.norm().powi(2)).sum::<f64>().sqrt()
}
