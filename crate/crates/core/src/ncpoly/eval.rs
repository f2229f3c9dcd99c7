use nalgebra::DMatrix;
use num_traits::Zero;

use super::{NcPoly, VariableContext, VariableKind, Word};
use crate::error::{Error, Result};
use crate::linalg::{asymmetry, symmetrize, Mat};
use crate::rat::{to_f64, RatMatrix};

/// Entry asymmetry tolerated when admitting symmetric tuples.
pub const SYMMETRY_ADMISSION_TOL: f64 = 1e-12;

/// A `g`-tuple of real `n×n` matrices, the point at which polynomials are
/// evaluated. In symmetric contexts every entry is exactly symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixTuple {
    kind: VariableKind,
    n: usize,
    mats: Vec<Mat>,
}

impl MatrixTuple {
    pub fn new(kind: VariableKind, mats: Vec<Mat>) -> Result<Self> {
        let n = mats.first().map_or(0, Mat::nrows);
        if mats.is_empty() {
            return Err(Error::InvalidInput("empty matrix tuple".into()));
        }
        for (j, m) in mats.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::ShapeMismatch(format!(
                    "tuple entry {} is {}x{}, expected {n}x{n}",
                    j + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let mats = match kind {
            VariableKind::Free => mats,
            VariableKind::Symmetric => mats
                .into_iter()
                .enumerate()
                .map(|(j, m)| {
                    let asym = asymmetry(&m);
                    if asym > SYMMETRY_ADMISSION_TOL {
                        Err(Error::NotSymmetric(format!("tuple entry {} has asymmetry {asym:e}", j + 1)))
                    } else {
                        Ok(symmetrize(&m))
                    }
                })
                .collect::<Result<_>>()?,
        };
        Ok(Self { kind, n, mats })
    }

    pub fn symmetric(mats: Vec<Mat>) -> Result<Self> {
        Self::new(VariableKind::Symmetric, mats)
    }

    pub fn free(mats: Vec<Mat>) -> Result<Self> {
        Self::new(VariableKind::Free, mats)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn g(&self) -> usize {
        self.mats.len()
    }

    pub fn kind(&self) -> VariableKind {
        self.kind
    }

    pub fn matrices(&self) -> &[Mat] {
        &self.mats
    }

    /// Entrywise direct sum `X ⊕ Y`.
    pub fn direct_sum(&self, other: &MatrixTuple) -> Result<MatrixTuple> {
        if self.g() != other.g() || self.kind != other.kind {
            return Err(Error::ShapeMismatch("direct sum of tuples of different length".into()));
        }
        let mats = self.mats.iter().zip(&other.mats).map(|(a, b)| crate::linalg::direct_sum(a, b)).collect();
        Ok(MatrixTuple { kind: self.kind, n: self.n + other.n, mats })
    }

    /// `(UᵀX₁U, …, UᵀX_gU)`.
    pub fn conjugate(&self, u: &Mat) -> MatrixTuple {
        let mats = self.mats.iter().map(|x| {
            let c = u.transpose() * x * u;
            if self.kind == VariableKind::Symmetric {
                symmetrize(&c)
            } else {
                c
            }
        });
        MatrixTuple { kind: self.kind, n: u.ncols(), mats: mats.collect() }
    }

    /// Concatenation `(X, H)` as a tuple of `2g` matrices.
    pub fn concat(&self, other: &MatrixTuple) -> Result<MatrixTuple> {
        if self.n != other.n || self.kind != other.kind {
            return Err(Error::ShapeMismatch("cannot concatenate tuples of different size".into()));
        }
        let mut mats = self.mats.clone();
        mats.extend(other.mats.iter().cloned());
        Ok(MatrixTuple { kind: self.kind, n: self.n, mats })
    }

    pub(crate) fn check_context(&self, ctx: VariableContext) -> Result<()> {
        if self.g() != ctx.g() {
            return Err(Error::ShapeMismatch(format!("polynomial has {} variables, tuple has {}", ctx.g(), self.g())));
        }
        if ctx.kind() == VariableKind::Symmetric && self.kind == VariableKind::Free {
            return Err(Error::InvalidInput("symmetric polynomial evaluated at a non-symmetric tuple".into()));
        }
        Ok(())
    }
}

/// Word evaluation against a fixed tuple with cached transposes.
pub(crate) struct WordEvaluator<'a> {
    mats: &'a [Mat],
    trans: Vec<Mat>,
    n: usize,
}

impl<'a> WordEvaluator<'a> {
    pub(crate) fn new(x: &'a MatrixTuple) -> Self {
        let trans = x.mats.iter().map(Mat::transpose).collect();
        Self { mats: &x.mats, trans, n: x.n }
    }

    pub(crate) fn word(&self, w: &Word) -> Mat {
        let mut acc = Mat::identity(self.n, self.n);
        for l in w.letters() {
            let m = if l.star { &self.trans[l.var] } else { &self.mats[l.var] };
            acc = acc * m;
        }
        acc
    }
}

impl NcPoly {
    /// Floating-point evaluation `Σ p_w w(X)`; the empty word maps to `Iₙ` and
    /// `xⱼ*` maps to `Xⱼᵀ`.
    pub fn evaluate(&self, x: &MatrixTuple) -> Result<Mat> {
        x.check_context(self.context())?;
        let ev = WordEvaluator::new(x);
        let mut out = DMatrix::zeros(x.n, x.n);
        for (w, c) in self.terms() {
            out += ev.word(w) * to_f64(c);
        }
        Ok(out)
    }

    /// Exact evaluation at rational matrices.
    pub fn evaluate_exact(&self, x: &[RatMatrix]) -> Result<RatMatrix> {
        if x.len() != self.context().g() {
            return Err(Error::ShapeMismatch(format!(
                "polynomial has {} variables, tuple has {}",
                self.context().g(),
                x.len()
            )));
        }
        let n = x.first().map_or(0, RatMatrix::nrows);
        if x.iter().any(|m| m.shape() != (n, n)) {
            return Err(Error::ShapeMismatch("tuple entries must be square and of equal size".into()));
        }
        let trans: Vec<RatMatrix> = x.iter().map(RatMatrix::transpose).collect();
        let mut out = RatMatrix::zeros(n, n);
        for (w, c) in self.terms() {
            if c.is_zero() {
                continue;
            }
            let mut acc = RatMatrix::identity(n);
            for l in w.letters() {
                acc = &acc * if l.star { &trans[l.var] } else { &x[l.var] };
            }
            out = &out + &acc.scale(c);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpoly::parse;
    use crate::rat::{rat, ratio};

    #[test]
    fn constant_evaluates_to_scaled_identity() {
        let ctx = VariableContext::symmetric(2);
        let p = parse("4", ctx).unwrap();
        let x = MatrixTuple::symmetric(vec![Mat::identity(3, 3), Mat::zeros(3, 3)]).unwrap();
        assert_eq!(p.evaluate(&x).unwrap(), Mat::identity(3, 3) * 4.0);
    }

    #[test]
    fn quartic_midpoint_defect_is_exact() {
        let ctx = VariableContext::symmetric(1);
        let p = parse("x^4", ctx).unwrap();
        let x = RatMatrix::from_i64(&[&[4, 2], &[2, 2]]);
        let y = RatMatrix::from_i64(&[&[2, 0], &[0, 0]]);
        let half = ratio(1, 2);
        let mid = (&x + &y).scale(&half);
        let px = p.evaluate_exact(&[x]).unwrap();
        let py = p.evaluate_exact(&[y]).unwrap();
        let pm = p.evaluate_exact(&[mid]).unwrap();
        let defect = &(&px.scale(&half) + &py.scale(&half)) - &pm;
        assert_eq!(defect, RatMatrix::from_i64(&[&[164, 120], &[120, 84]]));
        assert_eq!(defect[(0, 0)], rat(164));
    }

    #[test]
    fn free_star_evaluates_to_transpose() {
        let ctx = VariableContext::free(1);
        let p = parse("x'*x", ctx).unwrap();
        let a = Mat::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let x = MatrixTuple::free(vec![a.clone()]).unwrap();
        assert_eq!(p.evaluate(&x).unwrap(), a.transpose() * &a);
    }

    #[test]
    fn admission_rejects_asymmetric_and_mismatched() {
        let a = Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0 + 1e-9, 1.0]);
        assert!(matches!(MatrixTuple::symmetric(vec![a]), Err(Error::NotSymmetric(_))));
        let tiny = Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0 + 1e-13, 1.0]);
        let t = MatrixTuple::symmetric(vec![tiny]).unwrap();
        assert_eq!(t.matrices()[0][(0, 1)], t.matrices()[0][(1, 0)]);
        let r = MatrixTuple::symmetric(vec![Mat::identity(2, 2), Mat::identity(3, 3)]);
        assert!(matches!(r, Err(Error::ShapeMismatch(_))));
        let p = parse("x1^2", VariableContext::symmetric(2)).unwrap();
        let x = MatrixTuple::symmetric(vec![Mat::identity(2, 2)]).unwrap();
        assert!(matches!(p.evaluate(&x), Err(Error::ShapeMismatch(_))));
    }
}
