//! Free semialgebraic geometry toolkit.
//!
//! Polynomials in non-commuting (optionally starred) variables with exact
//! rational coefficients, monic linear pencils and their matricial solution
//! sets, and certificate searches backed by a small dense semidefinite
//! programming solver:
//!
//! * [`ncpoly`]: words, polynomials, involution, matrix evaluation,
//!   directional derivatives, cyclic reduction.
//! * [`pencil`]: linear pencils, direct sums, ball and cube pencils,
//!   unitary equivalence, minimal defining subpencils.
//! * [`sdp`]: primal-dual interior point solver with phase-I feasibility and
//!   Farkas rays.
//! * [`domination`]: LMI domination via Choi matrices, radius and matrix cube.
//! * [`positivity`]: sums of squares, eigenvalue optimization with minimizer
//!   extraction, quadratic module and left ideal membership, trace
//!   positivity, matrix convexity.

pub mod domination;
pub mod error;
pub mod io;
pub mod linalg;
pub mod ncpoly;
pub mod pencil;
pub mod positivity;
pub mod rat;
pub mod sdp;

pub use error::{Error, Result};
pub use ncpoly::{Letter, MatrixNcPoly, MatrixTuple, NcPoly, VariableContext, VariableKind, Word};
pub use pencil::LinearPencil;
pub use rat::{Rat, RatMatrix};
