use std::collections::BTreeMap;

use super::eval::WordEvaluator;
use super::{MatrixTuple, NcPoly, VariableContext, Word};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::rat::{Rat, RatMatrix};

/// A polynomial with `d×e` rational matrix coefficients, `Σ_w P_w ⊗ w`.
#[derive(Clone, PartialEq, Eq)]
pub struct MatrixNcPoly {
    ctx: VariableContext,
    shape: (usize, usize),
    coeffs: BTreeMap<Word, RatMatrix>,
}

impl MatrixNcPoly {
    pub fn zero(ctx: VariableContext, shape: (usize, usize)) -> Self {
        Self { ctx, shape, coeffs: BTreeMap::new() }
    }

    /// Embeds a scalar polynomial as a `1×1` matrix polynomial.
    pub fn from_scalar(p: &NcPoly) -> Self {
        let mut out = Self::zero(p.context(), (1, 1));
        for (w, c) in p.terms() {
            let mut m = RatMatrix::zeros(1, 1);
            m[(0, 0)] = c.clone();
            out.coeffs.insert(w.clone(), m);
        }
        out
    }

    /// Builds `Σ_{ij} E_ij ⊗ p_ij` from a grid of scalar polynomials.
    pub fn from_entries(ctx: VariableContext, entries: &[Vec<NcPoly>]) -> Result<Self> {
        let d = entries.len();
        let e = entries.first().map_or(0, Vec::len);
        if entries.iter().any(|row| row.len() != e) {
            return Err(Error::ShapeMismatch("ragged polynomial matrix".into()));
        }
        let mut out = Self::zero(ctx, (d, e));
        for (i, row) in entries.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                if p.context() != ctx {
                    return Err(Error::ContextMismatch);
                }
                for (w, c) in p.terms() {
                    let mut m = RatMatrix::zeros(d, e);
                    m[(i, j)] = c.clone();
                    out.add_term(w.clone(), &m)?;
                }
            }
        }
        Ok(out)
    }

    pub fn context(&self) -> VariableContext {
        self.ctx
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn add_term(&mut self, w: Word, m: &RatMatrix) -> Result<()> {
        if m.shape() != self.shape {
            return Err(Error::ShapeMismatch(format!(
                "coefficient is {:?}, polynomial is {:?}",
                m.shape(),
                self.shape
            )));
        }
        if m.is_zero() {
            return Ok(());
        }
        // reuse NcPoly's star normalisation
        let key = NcPoly::monomial(self.ctx, w, Rat::from_integer(1.into()))
            .terms()
            .next()
            .map(|(w, _)| w.clone())
            .expect("nonzero monomial");
        let sum = match self.coeffs.remove(&key) {
            Some(prev) => &prev + m,
            None => m.clone(),
        };
        if !sum.is_zero() {
            self.coeffs.insert(key, sum);
        }
        Ok(())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &RatMatrix)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, w: &Word) -> RatMatrix {
        self.coeffs.get(w).cloned().unwrap_or_else(|| RatMatrix::zeros(self.shape.0, self.shape.1))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(Word::len).max().unwrap_or(0)
    }

    /// Entry `(i, j)` as a scalar polynomial.
    pub fn entry(&self, i: usize, j: usize) -> NcPoly {
        NcPoly::from_terms(self.ctx, self.coeffs.iter().map(|(w, m)| (w.clone(), m[(i, j)].clone())))
    }

    /// `P* = Σ P_wᵀ ⊗ w*`.
    pub fn involution(&self) -> Self {
        let kind = self.ctx.kind();
        let mut out = Self::zero(self.ctx, (self.shape.1, self.shape.0));
        for (w, m) in &self.coeffs {
            out.coeffs.insert(w.involution(kind), m.transpose());
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        self.shape.0 == self.shape.1 && self.involution() == *self
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self> {
        if self.ctx != rhs.ctx {
            return Err(Error::ContextMismatch);
        }
        let mut out = self.clone();
        for (w, m) in &rhs.coeffs {
            out.add_term(w.clone(), m)?;
        }
        Ok(out)
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        if self.ctx != rhs.ctx {
            return Err(Error::ContextMismatch);
        }
        if self.shape.1 != rhs.shape.0 {
            return Err(Error::ShapeMismatch(format!("{:?} times {:?}", self.shape, rhs.shape)));
        }
        let mut out = Self::zero(self.ctx, (self.shape.0, rhs.shape.1));
        for (u, a) in &self.coeffs {
            for (v, b) in &rhs.coeffs {
                out.add_term(u.concat(v), &a.checked_mul(b)?)?;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rat) -> Self {
        let mut out = Self::zero(self.ctx, self.shape);
        for (w, m) in &self.coeffs {
            out.add_term(w.clone(), &m.scale(c)).expect("same shape");
        }
        out
    }

    /// `Σ_w P_w ⊗ w(X)`, a `(d·n)×(e·n)` matrix with the coefficient as the
    /// outer factor.
    pub fn evaluate(&self, x: &MatrixTuple) -> Result<Mat> {
        x.check_context(self.ctx)?;
        let n = x.n();
        let (d, e) = self.shape;
        let ev = WordEvaluator::new(x);
        let mut out = Mat::zeros(d * n, e * n);
        for (w, m) in &self.coeffs {
            let wx = ev.word(w);
            let mf = m.to_f64();
            out += mf.kronecker(&wx);
        }
        Ok(out)
    }
}

impl std::fmt::Debug for MatrixNcPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MatrixNcPoly")
            .field("shape", &self.shape)
            .field("terms", &self.coeffs.iter().map(|(w, m)| (w.to_string(), m)).collect::<Vec<_>>())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpoly::parse;

    #[test]
    fn kronecker_layout_and_involution() {
        let ctx = VariableContext::free(1);
        let p = MatrixNcPoly::from_entries(
            ctx,
            &[
                vec![parse("1", ctx).unwrap(), parse("x", ctx).unwrap()],
                vec![parse("0", ctx).unwrap(), parse("x'*x", ctx).unwrap()],
            ],
        )
        .unwrap();
        let a = Mat::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 3.0]);
        let x = MatrixTuple::free(vec![a.clone()]).unwrap();
        let v = p.evaluate(&x).unwrap();
        assert_eq!(v.view((0, 2), (2, 2)), a);
        assert_eq!(v.view((2, 2), (2, 2)), a.transpose() * &a);
        let vs = p.involution().evaluate(&x).unwrap();
        assert!((vs - v.transpose()).norm() < 1e-12);
        assert!(!p.is_symmetric());
        assert_eq!(p.entry(0, 1), parse("x", ctx).unwrap());
    }

    #[test]
    fn products_match_entrywise() {
        let ctx = VariableContext::symmetric(2);
        let a = MatrixNcPoly::from_entries(ctx, &[vec![parse("x1", ctx).unwrap(), parse("x2", ctx).unwrap()]]).unwrap();
        let prod = a.try_mul(&a.involution()).unwrap();
        assert_eq!(prod.shape(), (1, 1));
        assert_eq!(prod.entry(0, 0), parse("x1^2 + x2^2", ctx).unwrap());
        assert!(prod.is_symmetric());
    }
}
