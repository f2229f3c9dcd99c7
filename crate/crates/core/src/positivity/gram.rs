//! Gram-matrix SDPs: `p = Σ_b Σ_{u,v} G_b[u,v] · u* q_b v (+ ideal terms)`,
//! with coefficient constraints grouped by a word-class key.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};
use crate::ncpoly::{cyclic_star_key, NcPoly, VariableContext, Word};
use crate::rat::{kernel, to_f64, Rat};
use crate::sdp::{Block, BlockValue, SdpProblem, SparseSym};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ClassKey {
    /// `{w, w*}`: plain coefficient matching for symmetric targets.
    Plain,
    /// Rotation classes joined with their stars: matching mod commutators.
    Cyclic,
    /// One constraint per word.
    Word,
}

impl ClassKey {
    pub(crate) fn key(self, w: &Word, ctx: VariableContext) -> Word {
        match self {
            ClassKey::Plain => {
                let s = w.involution(ctx.kind());
                if s < *w {
                    s
                } else {
                    w.clone()
                }
            }
            ClassKey::Cyclic => cyclic_star_key(w, ctx.kind()),
            ClassKey::Word => w.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct GramBlock {
    pub basis: Vec<Word>,
    /// `q` in `u* q v`; the unit polynomial for plain SOS blocks.
    pub weight: NcPoly,
}

impl GramBlock {
    pub(crate) fn sos(ctx: VariableContext, basis: Vec<Word>) -> Self {
        GramBlock { basis, weight: NcPoly::one(ctx) }
    }

    fn is_plain(&self) -> bool {
        self.weight.num_terms() == 1 && self.weight.coeff(&Word::empty()).is_one()
    }
}

pub(crate) struct Row {
    pub a: SparseSym,
    pub rhs: Rat,
    /// The row as a combination of class constraints.
    pub combo: Vec<(Word, Rat)>,
}

pub(crate) struct Rows {
    pub rows: Vec<Row>,
    pub contradiction: Option<Row>,
}

impl Rows {
    /// The functional `L(k) = −Σᵣ yᵣ·combo_r[k]` on class keys.
    pub(crate) fn functional(&self, y: &[f64]) -> BTreeMap<Word, f64> {
        let mut out: BTreeMap<Word, f64> = BTreeMap::new();
        for (r, yr) in self.rows.iter().zip(y) {
            for (k, c) in &r.combo {
                *out.entry(k.clone()).or_insert(0.0) -= yr * to_f64(c);
            }
        }
        out
    }
}

/// Linear map `G ↦ Σ u* q v` with coefficients grouped by class.
#[derive(Clone, Debug)]
pub(crate) struct GramSystem {
    pub ctx: VariableContext,
    pub class: ClassKey,
    pub blocks: Vec<GramBlock>,
    /// Class key → `(block, i, j, c)` with `i ≤ j`: the class receives `c·G[i,j]`.
    pub contrib: BTreeMap<Word, Vec<(usize, usize, usize, Rat)>>,
    /// Class key → sum of target coefficients over the class.
    pub target: BTreeMap<Word, Rat>,
    /// Free polynomial terms `tₖ` (ideal elements) with unconstrained multipliers.
    pub free_terms: Vec<NcPoly>,
}

impl GramSystem {
    pub(crate) fn new(p: &NcPoly, class: ClassKey, blocks: Vec<GramBlock>, free_terms: Vec<NcPoly>) -> Self {
        let ctx = p.context();
        let kind = ctx.kind();
        let mut acc: BTreeMap<(Word, usize, usize, usize), Rat> = BTreeMap::new();
        for (b, blk) in blocks.iter().enumerate() {
            let stars: Vec<Word> = blk.basis.iter().map(|u| u.involution(kind)).collect();
            for i in 0..blk.basis.len() {
                for j in i..blk.basis.len() {
                    for (wq, c) in blk.weight.terms() {
                        let w1 = stars[i].concat(wq).concat(&blk.basis[j]);
                        *acc.entry((class.key(&w1, ctx), b, i, j)).or_insert_with(Rat::zero) += c;
                        if i != j {
                            let w2 = stars[j].concat(wq).concat(&blk.basis[i]);
                            *acc.entry((class.key(&w2, ctx), b, i, j)).or_insert_with(Rat::zero) += c;
                        }
                    }
                }
            }
        }
        let mut contrib: BTreeMap<Word, Vec<(usize, usize, usize, Rat)>> = BTreeMap::new();
        for ((k, b, i, j), c) in acc {
            if !c.is_zero() {
                contrib.entry(k).or_default().push((b, i, j, c));
            }
        }
        let mut target: BTreeMap<Word, Rat> = BTreeMap::new();
        for (w, c) in p.terms() {
            *target.entry(class.key(w, ctx)).or_insert_with(Rat::zero) += c;
        }
        target.retain(|_, c| !c.is_zero());
        GramSystem { ctx, class, blocks, contrib, target, free_terms }
    }

    /// All class keys touched by the Gram map, the target or a free term.
    pub(crate) fn keys(&self) -> Vec<Word> {
        let mut keys: BTreeSet<Word> = self.contrib.keys().cloned().collect();
        keys.extend(self.target.keys().cloned());
        for t in &self.free_terms {
            keys.extend(t.terms().map(|(w, _)| self.class.key(w, self.ctx)));
        }
        keys.into_iter().collect()
    }

    fn free_keys(&self) -> BTreeSet<Word> {
        self.free_terms.iter().flat_map(|t| t.terms().map(|(w, _)| self.class.key(w, self.ctx))).collect()
    }

    /// Drops basis words forced to zero: a class with zero target that only
    /// receives positive diagonal entries of plain blocks pins those entries
    /// (hence their rows) to zero. Repeats until stable.
    pub(crate) fn facial_reduction(mut self) -> Self {
        loop {
            let free = self.free_keys();
            let mut drop: BTreeSet<(usize, usize)> = BTreeSet::new();
            for (k, list) in &self.contrib {
                if free.contains(k) || self.target.get(k).is_some_and(|c| !c.is_zero()) {
                    continue;
                }
                if list.iter().all(|(b, i, j, c)| i == j && c.is_positive() && self.blocks[*b].is_plain()) {
                    drop.extend(list.iter().map(|&(b, i, _, _)| (b, i)));
                }
            }
            if drop.is_empty() {
                return self;
            }
            let blocks: Vec<GramBlock> = self
                .blocks
                .iter()
                .enumerate()
                .map(|(b, blk)| GramBlock {
                    basis: blk
                        .basis
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| !drop.contains(&(b, *i)))
                        .map(|(_, w)| w.clone())
                        .collect(),
                    weight: blk.weight.clone(),
                })
                .collect();
            let p = self.target_poly();
            self = GramSystem::new(&p, self.class, blocks, std::mem::take(&mut self.free_terms));
        }
    }

    /// A polynomial with the same class targets (one representative per class).
    fn target_poly(&self) -> NcPoly {
        NcPoly::from_terms(self.ctx, self.target.iter().map(|(k, c)| (k.clone(), c.clone())))
    }

    /// Constraint rows: one per class key, or, with free terms, one per
    /// vector of an exact basis of the annihilator of the free terms. Rows
    /// without Gram entries are dropped; a dropped row with nonzero right
    /// hand side is an exact contradiction.
    pub(crate) fn rows(&self) -> Rows {
        let keys = self.keys();
        let combos: Vec<Vec<(Word, Rat)>> = if self.free_terms.is_empty() {
            keys.iter().map(|k| vec![(k.clone(), Rat::one())]).collect()
        } else {
            let index: BTreeMap<&Word, usize> = keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
            // each free term as a vector over keys
            let rt: Vec<Vec<Rat>> = self
                .free_terms
                .iter()
                .map(|t| {
                    let mut v = vec![Rat::zero(); keys.len()];
                    for (w, c) in t.terms() {
                        v[index[&self.class.key(w, self.ctx)]] += c;
                    }
                    v
                })
                .collect();
            kernel(&rt, keys.len())
                .into_iter()
                .map(|n| keys.iter().zip(n).filter(|(_, c)| !c.is_zero()).map(|(k, c)| (k.clone(), c)).collect())
                .collect()
        };
        let mut out = Rows { rows: Vec::new(), contradiction: None };
        for combo in combos {
            let mut entries: BTreeMap<(usize, usize, usize), Rat> = BTreeMap::new();
            let mut rhs = Rat::zero();
            for (k, nk) in &combo {
                if let Some(list) = self.contrib.get(k) {
                    for (b, i, j, c) in list {
                        *entries.entry((*b, *i, *j)).or_insert_with(Rat::zero) += c * nk;
                    }
                }
                if let Some(t) = self.target.get(k) {
                    rhs += t * nk;
                }
            }
            entries.retain(|_, c| !c.is_zero());
            if entries.is_empty() {
                if !rhs.is_zero() && out.contradiction.is_none() {
                    out.contradiction = Some(Row { a: SparseSym::new(), rhs, combo });
                }
                continue;
            }
            let mut a = SparseSym::new();
            for ((b, i, j), c) in entries {
                a.add_functional(b, i, j, to_f64(&c));
            }
            out.rows.push(Row { a, rhs, combo });
        }
        out
    }

    /// The SDP over the nonempty blocks, with the block index map.
    pub(crate) fn problem(&self, rows: &Rows) -> (SdpProblem, Vec<Option<usize>>) {
        let mut remap = Vec::with_capacity(self.blocks.len());
        let mut blocks = Vec::new();
        for b in &self.blocks {
            if b.basis.is_empty() {
                remap.push(None);
            } else {
                remap.push(Some(blocks.len()));
                blocks.push(Block::psd(b.basis.len()));
            }
        }
        let mut p = SdpProblem::new(blocks);
        for r in &rows.rows {
            let mut a = SparseSym::new();
            for (b, i, j, v) in r.a.entries() {
                a.add_entry(remap[b].expect("entries live in nonempty blocks"), i, j, v);
            }
            p.add_constraint(a, to_f64(&r.rhs));
        }
        (p, remap)
    }

    /// Dense Gram blocks from an SDP point over the nonempty blocks.
    pub(crate) fn grams(&self, x: &[BlockValue], remap: &[Option<usize>]) -> Vec<Mat> {
        remap
            .iter()
            .zip(&self.blocks)
            .map(|(r, b)| r.map_or_else(|| Mat::zeros(b.basis.len(), b.basis.len()), |k| x[k].to_dense()))
            .collect()
    }

    /// Image of the Gram blocks per class key, in floating point.
    pub(crate) fn image(&self, g: &[Mat]) -> BTreeMap<Word, f64> {
        self.contrib
            .iter()
            .map(|(k, list)| (k.clone(), list.iter().map(|(b, i, j, c)| to_f64(c) * g[*b][(*i, *j)]).sum()))
            .collect()
    }

    /// Least-squares multipliers of the free terms for the remainder
    /// `target − image`, and the max class residual after subtracting them.
    pub(crate) fn residual(&self, g: &[Mat]) -> (f64, Vec<f64>) {
        let keys = self.keys();
        let img = self.image(g);
        let rem: Vec<f64> =
            keys.iter().map(|k| self.target.get(k).map_or(0.0, to_f64) - img.get(k).copied().unwrap_or(0.0)).collect();
        if self.free_terms.is_empty() {
            return (rem.iter().fold(0.0, |a, b| a.max(b.abs())), Vec::new());
        }
        let index: BTreeMap<&Word, usize> = keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
        let mut r = Mat::zeros(keys.len(), self.free_terms.len());
        for (t, term) in self.free_terms.iter().enumerate() {
            for (w, c) in term.terms() {
                r[(index[&self.class.key(w, self.ctx)], t)] += to_f64(c);
            }
        }
        let rem_v = Vector::from_vec(rem);
        let svd = r.clone().svd(true, true);
        let z = svd.solve(&rem_v, 1e-12).unwrap_or_else(|_| Vector::zeros(self.free_terms.len()));
        let left = &rem_v - &r * &z;
        (left.amax(), z.iter().copied().collect())
    }
}

/// Factors `hⱼ = √λⱼ Σ vⱼ[u]·u` from an eigendecomposition of a Gram matrix;
/// eigenvalues below `1e−10·λ_max` are dropped.
pub(crate) fn gram_factors(ctx: VariableContext, basis: &[Word], g: &Mat) -> Vec<NcPoly> {
    let (vals, vecs) = crate::linalg::sym_eigen(g);
    let lmax = vals.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut out = Vec::new();
    for k in (0..vals.len()).rev() {
        if vals[k] <= 1e-10 * lmax || vals[k] <= 0.0 {
            continue;
        }
        let s = vals[k].sqrt();
        let terms = basis.iter().enumerate().filter_map(|(i, u)| {
            let c = s * vecs[(i, k)];
            (c.abs() > 1e-14 * s).then(|| (u.clone(), crate::rat::from_f64_decimal(c)))
        });
        out.push(NcPoly::from_terms(ctx, terms));
    }
    out
}

pub(crate) fn require_symmetric(p: &NcPoly, what: &str) -> Result<()> {
    if p.is_symmetric() {
        Ok(())
    } else {
        Err(Error::NotSymmetric(format!("{what} must be symmetric")))
    }
}
