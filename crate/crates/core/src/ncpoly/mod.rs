//! Polynomials in non-commuting variables.
//!
//! Two flavours of variables are supported through [`VariableContext`]:
//! symmetric letters (`xⱼ* = xⱼ`) and free letters where `xⱼ` and `xⱼ*` are
//! distinct. Coefficients are exact rationals; floating point only appears at
//! matrix evaluation.

mod cyclic;
mod derivative;
mod eval;
mod matrix_poly;
mod parse;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rat::{format_rational, Rat};

pub use cyclic::{canonical_rotation, cyclic_canonical, cyclic_star_key, cyclically_equivalent};
pub use derivative::BiPoly;
pub use eval::MatrixTuple;
pub use matrix_poly::MatrixNcPoly;
pub use parse::parse;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VariableKind {
    /// `xⱼ* = xⱼ`; evaluated at symmetric matrices.
    Symmetric,
    /// `xⱼ` and `xⱼ*` are distinct letters; evaluated at arbitrary matrices.
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VariableContext {
    g: usize,
    kind: VariableKind,
}

impl VariableContext {
    pub fn new(g: usize, kind: VariableKind) -> Result<Self> {
        if g == 0 {
            return Err(Error::InvalidInput("a variable context needs g >= 1".into()));
        }
        Ok(Self { g, kind })
    }

    pub fn symmetric(g: usize) -> Self {
        Self::new(g, VariableKind::Symmetric).expect("g >= 1")
    }

    pub fn free(g: usize) -> Self {
        Self::new(g, VariableKind::Free).expect("g >= 1")
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn kind(&self) -> VariableKind {
        self.kind
    }

    pub fn is_free(&self) -> bool {
        self.kind == VariableKind::Free
    }

    /// Letters of the alphabet in their canonical order `x1 < x1* < x2 < …`.
    pub fn alphabet(&self) -> Vec<Letter> {
        let mut out = Vec::with_capacity(2 * self.g);
        for var in 0..self.g {
            out.push(Letter::new(var, false));
            if self.is_free() {
                out.push(Letter::new(var, true));
            }
        }
        out
    }

    pub fn alphabet_size(&self) -> usize {
        if self.is_free() {
            2 * self.g
        } else {
            self.g
        }
    }
}

/// A single letter `xⱼ` or `xⱼ*` (0-based variable index).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub var: usize,
    pub star: bool,
}

impl Letter {
    pub fn new(var: usize, star: bool) -> Self {
        Self { var, star }
    }

    pub fn involution(self, kind: VariableKind) -> Self {
        match kind {
            VariableKind::Symmetric => self,
            VariableKind::Free => Self { var: self.var, star: !self.star },
        }
    }
}

/// A word over the letters of a context; the empty word is the unit.
///
/// Ordered graded-lexicographically: shorter words first, then letter by
/// letter.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn new(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn from_vars(vars: &[usize]) -> Self {
        Word(vars.iter().map(|&v| Letter::new(v, false)).collect())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn involution(&self, kind: VariableKind) -> Word {
        Word(self.0.iter().rev().map(|l| l.involution(kind)).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// `u* v` for the Gram-matrix pairing.
    pub fn star_concat(u: &Word, v: &Word, kind: VariableKind) -> Word {
        u.involution(kind).concat(v)
    }

    pub fn prepend(&self, letter: Letter) -> Word {
        let mut v = Vec::with_capacity(self.len() + 1);
        v.push(letter);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    pub fn format(&self, names: &dyn Fn(usize) -> String) -> String {
        if self.is_empty() {
            return "1".into();
        }
        let mut parts = Vec::new();
        let mut i = 0;
        while i < self.0.len() {
            let l = self.0[i];
            let mut run = 1;
            while i + run < self.0.len() && self.0[i + run] == l {
                run += 1;
            }
            let mut s = names(l.var);
            if l.star {
                s.push('\'');
            }
            if run > 1 {
                s.push_str(&format!("^{run}"));
            }
            parts.push(s);
            i += run;
        }
        parts.join("*")
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format(&|v| format!("x{}", v + 1)))
    }
}

/// All words of degree `<= d`, graded-lexicographically ordered. Its length is
/// `Σ_{j≤d} Gʲ` with `G` the alphabet size.
pub fn word_basis(ctx: VariableContext, d: usize) -> Vec<Word> {
    let alphabet = ctx.alphabet();
    let mut out = vec![Word::empty()];
    let mut layer = vec![Word::empty()];
    for _ in 0..d {
        let mut next = Vec::with_capacity(layer.len() * alphabet.len());
        for w in &layer {
            for &l in &alphabet {
                let mut v = w.0.clone();
                v.push(l);
                next.push(Word(v));
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// A finite linear combination of words with rational coefficients.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NcPoly {
    ctx: VariableContext,
    coeffs: BTreeMap<Word, Rat>,
}

impl NcPoly {
    pub fn zero(ctx: VariableContext) -> Self {
        Self { ctx, coeffs: BTreeMap::new() }
    }

    pub fn constant(ctx: VariableContext, c: Rat) -> Self {
        Self::monomial(ctx, Word::empty(), c)
    }

    pub fn one(ctx: VariableContext) -> Self {
        Self::constant(ctx, Rat::one())
    }

    /// The variable `x_{var}` (0-based).
    pub fn var(ctx: VariableContext, var: usize) -> Self {
        Self::letter(ctx, Letter::new(var, false))
    }

    pub fn letter(ctx: VariableContext, l: Letter) -> Self {
        Self::monomial(ctx, Word(vec![l]), Rat::one())
    }

    pub fn monomial(ctx: VariableContext, w: Word, c: Rat) -> Self {
        let mut p = Self::zero(ctx);
        p.add_term(w, c);
        p
    }

    pub fn from_terms(ctx: VariableContext, terms: impl IntoIterator<Item = (Word, Rat)>) -> Self {
        let mut p = Self::zero(ctx);
        for (w, c) in terms {
            p.add_term(w, c);
        }
        p
    }

    pub fn context(&self) -> VariableContext {
        self.ctx
    }

    /// Adds `c·w`, normalising stars away in symmetric contexts and dropping
    /// zero coefficients.
    pub fn add_term(&mut self, w: Word, c: Rat) {
        if c.is_zero() {
            return;
        }
        debug_assert!(w.0.iter().all(|l| l.var < self.ctx.g));
        let w = if self.ctx.is_free() { w } else { Word(w.0.into_iter().map(|l| Letter::new(l.var, false)).collect()) };
        match self.coeffs.entry(w) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn coeff(&self, w: &Word) -> Rat {
        self.coeffs.get(w).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Rat)> {
        self.coeffs.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree of the highest stored word; `0` for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(Word::len).max().unwrap_or(0)
    }

    pub fn involution(&self) -> NcPoly {
        let kind = self.ctx.kind;
        NcPoly { ctx: self.ctx, coeffs: self.coeffs.iter().map(|(w, c)| (w.involution(kind), c.clone())).collect() }
    }

    pub fn is_symmetric(&self) -> bool {
        let kind = self.ctx.kind;
        self.coeffs.iter().all(|(w, c)| self.coeffs.get(&w.involution(kind)) == Some(c))
    }

    pub fn scale(&self, c: &Rat) -> NcPoly {
        if c.is_zero() {
            return NcPoly::zero(self.ctx);
        }
        NcPoly { ctx: self.ctx, coeffs: self.coeffs.iter().map(|(w, a)| (w.clone(), a * c)).collect() }
    }

    pub fn try_add(&self, rhs: &NcPoly) -> Result<NcPoly> {
        self.check_ctx(rhs)?;
        let mut out = self.clone();
        for (w, c) in &rhs.coeffs {
            out.add_term(w.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, rhs: &NcPoly) -> Result<NcPoly> {
        self.try_add(&-rhs)
    }

    pub fn try_mul(&self, rhs: &NcPoly) -> Result<NcPoly> {
        self.check_ctx(rhs)?;
        let mut out = NcPoly::zero(self.ctx);
        for (u, a) in &self.coeffs {
            for (v, b) in &rhs.coeffs {
                out.add_term(u.concat(v), a * b);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: usize) -> NcPoly {
        let mut out = NcPoly::one(self.ctx);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> Rat {
        self.coeffs.values().map(|c| c.abs()).max().unwrap_or_else(Rat::zero)
    }

    /// Re-embeds the polynomial in a context with at least as many variables
    /// of the same kind.
    pub fn lift(&self, ctx: VariableContext) -> Result<NcPoly> {
        if ctx.kind != self.ctx.kind || ctx.g < self.ctx.g {
            return Err(Error::ContextMismatch);
        }
        Ok(NcPoly { ctx, coeffs: self.coeffs.clone() })
    }

    fn check_ctx(&self, rhs: &NcPoly) -> Result<()> {
        if self.ctx != rhs.ctx {
            Err(Error::ContextMismatch)
        } else {
            Ok(())
        }
    }

    /// Formats with custom variable names (index → name).
    pub fn format_with(&self, names: &dyn Fn(usize) -> String) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (w, c)) in self.coeffs.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            if w.is_empty() {
                out.push_str(&format_rational(&mag));
            } else {
                if !mag.is_one() {
                    out.push_str(&format_rational(&mag));
                    out.push('*');
                }
                out.push_str(&w.format(names));
            }
        }
        out
    }
}

impl fmt::Display for NcPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format_with(&|v| format!("x{}", v + 1)))
    }
}

impl fmt::Debug for NcPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NcPoly[{:?}, g={}]({})", self.ctx.kind, self.ctx.g, self)
    }
}

// Operator forms panic on context mismatch; use the `try_*` methods for
// fallible combination.
impl Add for &NcPoly {
    type Output = NcPoly;
    fn add(self, rhs: &NcPoly) -> NcPoly {
        self.try_add(rhs).expect("context mismatch")
    }
}

impl Sub for &NcPoly {
    type Output = NcPoly;
    fn sub(self, rhs: &NcPoly) -> NcPoly {
        self.try_sub(rhs).expect("context mismatch")
    }
}

impl Mul for &NcPoly {
    type Output = NcPoly;
    fn mul(self, rhs: &NcPoly) -> NcPoly {
        self.try_mul(rhs).expect("context mismatch")
    }
}

impl Neg for &NcPoly {
    type Output = NcPoly;
    fn neg(self) -> NcPoly {
        NcPoly { ctx: self.ctx, coeffs: self.coeffs.iter().map(|(w, c)| (w.clone(), -c)).collect() }
    }
}

impl Add for NcPoly {
    type Output = NcPoly;
    fn add(self, rhs: NcPoly) -> NcPoly {
        &self + &rhs
    }
}

impl Sub for NcPoly {
    type Output = NcPoly;
    fn sub(self, rhs: NcPoly) -> NcPoly {
        &self - &rhs
    }
}

impl Mul for NcPoly {
    type Output = NcPoly;
    fn mul(self, rhs: NcPoly) -> NcPoly {
        &self * &rhs
    }
}

impl Neg for NcPoly {
    type Output = NcPoly;
    fn neg(self) -> NcPoly {
        -&self
    }
}
