//! Linear pencils `L(x) = A₀ + Σ Aⱼxⱼ` with symmetric coefficients and their
//! solution sets `D_L(n) = {X : L(X) ≻ 0}`.

mod equivalence;
mod minimal;

pub use equivalence::{irreducible_blocks, unitarily_equivalent, Equivalence};
pub use minimal::minimal_defining_pencil;

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, direct_sum as mat_direct_sum, min_eig, symmetrize, Mat};
use crate::ncpoly::{MatrixTuple, VariableKind};
use crate::rat::RatMatrix;

pub const SYMMETRY_ADMISSION_TOL: f64 = 1e-12;

/// Closure membership tolerance on `λ_min(L(X))`.
pub const CLOSURE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearPencil {
    size: usize,
    a0: Mat,
    a: Vec<Mat>,
    monic: bool,
}

fn admit(m: Mat, what: &str, size: usize) -> Result<Mat> {
    if m.nrows() != size || m.ncols() != size {
        return Err(Error::ShapeMismatch(format!("{what} is {}x{}, expected {size}x{size}", m.nrows(), m.ncols())));
    }
    let asym = asymmetry(&m);
    if asym > SYMMETRY_ADMISSION_TOL {
        return Err(Error::NotSymmetric(format!("{what} has asymmetry {asym:e}")));
    }
    Ok(symmetrize(&m))
}

impl LinearPencil {
    pub fn new(a0: Mat, a: Vec<Mat>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidInput("a pencil needs at least one variable".into()));
        }
        let size = a0.nrows();
        let a0 = admit(a0, "A0", size)?;
        let a = a
            .into_iter()
            .enumerate()
            .map(|(j, m)| admit(m, &format!("A{}", j + 1), size))
            .collect::<Result<Vec<_>>>()?;
        let monic = a0 == Mat::identity(size, size);
        Ok(Self { size, a0, a, monic })
    }

    /// `I + Σ Aⱼxⱼ`.
    pub fn monic(a: Vec<Mat>) -> Result<Self> {
        let size = a.first().map_or(0, Mat::nrows);
        Self::new(Mat::identity(size, size), a)
    }

    pub fn from_rational(a0: &RatMatrix, a: &[RatMatrix]) -> Result<Self> {
        Self::new(a0.to_f64(), a.iter().map(RatMatrix::to_f64).collect())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn g(&self) -> usize {
        self.a.len()
    }

    pub fn a0(&self) -> &Mat {
        &self.a0
    }

    pub fn coeffs(&self) -> &[Mat] {
        &self.a
    }

    pub fn is_monic(&self) -> bool {
        self.monic
    }

    pub(crate) fn require_monic(&self) -> Result<()> {
        if self.monic {
            Ok(())
        } else {
            Err(Error::NonMonic)
        }
    }

    /// `A₀ ⊗ Iₙ + Σ Aⱼ ⊗ Xⱼ`.
    pub fn eval(&self, x: &MatrixTuple) -> Result<Mat> {
        if x.g() != self.g() {
            return Err(Error::ShapeMismatch(format!("pencil has {} variables, tuple has {}", self.g(), x.g())));
        }
        if x.kind() != VariableKind::Symmetric {
            return Err(Error::InvalidInput("pencils are evaluated at symmetric tuples".into()));
        }
        let n = x.n();
        let mut out = self.a0.kronecker(&Mat::identity(n, n));
        for (a, xm) in self.a.iter().zip(x.matrices()) {
            out += a.kronecker(xm);
        }
        Ok(symmetrize(&out))
    }

    /// Scalar evaluation `A₀ + Σ Aⱼxⱼ`.
    pub fn eval_scalar(&self, x: &[f64]) -> Result<Mat> {
        if x.len() != self.g() {
            return Err(Error::ShapeMismatch(format!("pencil has {} variables, point has {}", self.g(), x.len())));
        }
        let mut out = self.a0.clone();
        for (a, &t) in self.a.iter().zip(x) {
            out += a * t;
        }
        Ok(out)
    }

    pub fn membership(&self, x: &MatrixTuple) -> Result<PencilMembership> {
        let min = min_eig(&self.eval(x)?);
        Ok(PencilMembership { x: x.clone(), min_eig: min, inside: min > 0.0, in_closure: min >= -CLOSURE_TOL })
    }

    /// Block-diagonal `L ⊕ M`; `D_{L⊕M} = D_L ∩ D_M`.
    pub fn direct_sum(&self, other: &LinearPencil) -> Result<LinearPencil> {
        if self.g() != other.g() {
            return Err(Error::ShapeMismatch(format!(
                "direct sum of pencils in {} and {} variables",
                self.g(),
                other.g()
            )));
        }
        let a = self.a.iter().zip(&other.a).map(|(x, y)| mat_direct_sum(x, y)).collect();
        LinearPencil::new(mat_direct_sum(&self.a0, &other.a0), a)
    }

    pub fn direct_sum_all(parts: &[LinearPencil]) -> Result<LinearPencil> {
        let (first, rest) = parts.split_first().ok_or_else(|| Error::InvalidInput("empty direct sum".into()))?;
        rest.iter().try_fold(first.clone(), |acc, p| acc.direct_sum(p))
    }

    /// Coefficientwise `UᵀAⱼU`.
    pub fn conjugate(&self, u: &Mat) -> Result<LinearPencil> {
        if u.nrows() != self.size {
            return Err(Error::ShapeMismatch("conjugating matrix has the wrong size".into()));
        }
        let c = |m: &Mat| symmetrize(&(u.transpose() * m * u));
        let mut out = LinearPencil::new(c(&self.a0), self.a.iter().map(c).collect())?;
        if self.monic && (u.transpose() * u - Mat::identity(u.ncols(), u.ncols())).amax() < 1e-12 {
            out.a0 = Mat::identity(u.ncols(), u.ncols());
            out.monic = true;
        }
        Ok(out)
    }

    /// Substitutes `xⱼ → c·xⱼ`.
    pub fn scale_variables(&self, c: f64) -> LinearPencil {
        LinearPencil { a: self.a.iter().map(|m| m * c).collect(), ..self.clone() }
    }

    /// The `(g+1)×(g+1)` arrow pencil with `xⱼ/ρ` in the first row and
    /// column; `D = {X : Σ Xⱼ² ≺ ρ²I}`.
    pub fn ball(g: usize, rho: f64) -> Result<LinearPencil> {
        if !(rho > 0.0) || !rho.is_finite() || g == 0 {
            return Err(Error::InvalidInput(format!("ball needs g >= 1 and a positive radius, got g={g}, rho={rho}")));
        }
        let a = (0..g)
            .map(|j| {
                let mut m = Mat::zeros(g + 1, g + 1);
                m[(0, j + 1)] = 1.0 / rho;
                m[(j + 1, 0)] = 1.0 / rho;
                m
            })
            .collect();
        LinearPencil::monic(a)
    }

    /// The `2g×2g` diagonal pencil with blocks `1 ± xⱼ/β`; `D = {X : ‖Xⱼ‖ < β}`.
    pub fn cube(g: usize, beta: f64) -> Result<LinearPencil> {
        if !(beta > 0.0) || !beta.is_finite() || g == 0 {
            return Err(Error::InvalidInput(format!(
                "cube needs g >= 1 and a positive half-width, got g={g}, beta={beta}"
            )));
        }
        let a = (0..g)
            .map(|j| {
                let mut m = Mat::zeros(2 * g, 2 * g);
                m[(2 * j, 2 * j)] = 1.0 / beta;
                m[(2 * j + 1, 2 * j + 1)] = -1.0 / beta;
                m
            })
            .collect();
        LinearPencil::monic(a)
    }
}

/// Evaluation of a pencil at a tuple: `inside ⇔ λ_min(L(X)) > 0`.
#[derive(Clone, Debug)]
pub struct PencilMembership {
    pub x: MatrixTuple,
    pub min_eig: f64,
    pub inside: bool,
    pub in_closure: bool,
}
