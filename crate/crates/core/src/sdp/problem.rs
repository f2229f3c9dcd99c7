use std::collections::BTreeMap;

use super::BlockValue;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Psd,
    /// Nonnegative diagonal block.
    Lp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub kind: BlockKind,
    pub size: usize,
}

impl Block {
    pub fn psd(size: usize) -> Self {
        Block { kind: BlockKind::Psd, size }
    }

    pub fn lp(size: usize) -> Self {
        Block { kind: BlockKind::Lp, size }
    }
}

/// Sparse symmetric block-diagonal matrix, stored as upper-triangular entries
/// `(block, row, col) -> value` with `row <= col`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseSym {
    entries: BTreeMap<(usize, usize, usize), f64>,
}

impl SparseSym {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `v` to the symmetric pair of entries `(i, j)` and `(j, i)`.
    pub fn add_entry(&mut self, block: usize, i: usize, j: usize, v: f64) {
        if v == 0.0 {
            return;
        }
        let key = (block, i.min(j), i.max(j));
        let e = self.entries.entry(key).or_insert(0.0);
        *e += v;
        if *e == 0.0 {
            self.entries.remove(&key);
        }
    }

    /// Adjusts the matrix so that `⟨self, X⟩` gains `v·X[i, j]` for symmetric `X`.
    pub fn add_functional(&mut self, block: usize, i: usize, j: usize, v: f64) {
        if i == j {
            self.add_entry(block, i, i, v);
        } else {
            self.add_entry(block, i, j, 0.5 * v);
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(b, i, j), &v)| (b, i, j, v))
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scale(&mut self, a: f64) {
        for v in self.entries.values_mut() {
            *v *= a;
        }
    }

    /// Frobenius norm of the full symmetric matrix.
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(&(_, i, j), v)| if i == j { v * v } else { 2.0 * v * v }).sum::<f64>().sqrt()
    }

    /// `⟨self, X⟩`.
    pub fn dot(&self, x: &[BlockValue]) -> f64 {
        self.entries
            .iter()
            .map(|(&(b, i, j), &v)| if i == j { v * x[b].get(i, i) } else { v * (x[b].get(i, j) + x[b].get(j, i)) })
            .sum()
    }
}

/// `min ⟨C,X⟩ s.t. ⟨Aᵢ,X⟩ = bᵢ, X ⪰ 0` over a fixed block structure.
#[derive(Clone, Debug, Default)]
pub struct SdpProblem {
    blocks: Vec<Block>,
    objective: SparseSym,
    constraints: Vec<SparseSym>,
    rhs: Vec<f64>,
}

impl SdpProblem {
    pub fn new(blocks: Vec<Block>) -> Self {
        Self { blocks, ..Default::default() }
    }

    pub fn add_block(&mut self, block: Block) -> usize {
        self.blocks.push(block);
        self.blocks.len() - 1
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.size).sum()
    }

    pub fn objective(&self) -> &SparseSym {
        &self.objective
    }

    pub fn objective_mut(&mut self) -> &mut SparseSym {
        &mut self.objective
    }

    pub fn set_objective(&mut self, c: SparseSym) {
        self.objective = c;
    }

    pub fn add_constraint(&mut self, a: SparseSym, b: f64) -> usize {
        self.constraints.push(a);
        self.rhs.push(b);
        self.constraints.len() - 1
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraint(&self, i: usize) -> &SparseSym {
        &self.constraints[i]
    }

    pub fn constraints(&self) -> &[SparseSym] {
        &self.constraints
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Largest violation `|⟨Aᵢ,X⟩ − bᵢ|`.
    pub fn max_violation(&self, x: &[BlockValue]) -> f64 {
        self.constraints.iter().zip(&self.rhs).map(|(a, b)| (a.dot(x) - b).abs()).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |s: &SparseSym, what: &str| -> Result<()> {
            for (b, i, j, v) in s.entries() {
                let block = self
                    .blocks
                    .get(b)
                    .ok_or_else(|| Error::InvalidInput(format!("{what}: block {b} does not exist")))?;
                if j >= block.size {
                    return Err(Error::InvalidInput(format!("{what}: entry ({i},{j}) outside block {b}")));
                }
                if block.kind == BlockKind::Lp && i != j {
                    return Err(Error::InvalidInput(format!("{what}: off-diagonal entry in LP block {b}")));
                }
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!("{what}: non-finite entry")));
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (k, a) in self.constraints.iter().enumerate() {
            check(a, &format!("constraint {k}"))?;
        }
        if self.rhs.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("non-finite right-hand side".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;

    #[test]
    fn functional_counts_off_diagonal_once() {
        let mut a = SparseSym::new();
        a.add_functional(0, 0, 1, 3.0);
        a.add_functional(0, 1, 1, 1.0);
        let x = vec![BlockValue::Dense(Mat::from_row_slice(2, 2, &[5.0, 2.0, 2.0, 7.0]))];
        assert_eq!(a.dot(&x), 3.0 * 2.0 + 7.0);
    }

    #[test]
    fn validation_catches_bad_entries() {
        let mut p = SdpProblem::new(vec![Block::psd(2), Block::lp(2)]);
        let mut a = SparseSym::new();
        a.add_entry(1, 0, 1, 1.0);
        p.add_constraint(a, 1.0);
        assert!(p.validate().is_err());
        let mut q = SdpProblem::new(vec![Block::psd(2)]);
        let mut a = SparseSym::new();
        a.add_entry(0, 0, 2, 1.0);
        q.add_constraint(a, 1.0);
        assert!(q.validate().is_err());
    }
}
