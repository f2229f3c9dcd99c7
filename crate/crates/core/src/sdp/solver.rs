use std::collections::HashMap;
use std::fmt;

use log::debug;
use nalgebra::{Cholesky, Dyn, LU};

use super::{blocks_dot, blocks_norm, Block, BlockKind, BlockValue, SdpProblem, SparseSym};
use crate::error::{Error, Result};
use crate::linalg::{sym_eigenvalues, symmetrize, Mat, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SdpStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIter,
    NumericalFailure,
}

impl SdpStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SdpStatus::Optimal => "optimal",
            SdpStatus::PrimalInfeasible => "primal_infeasible",
            SdpStatus::DualInfeasible => "dual_infeasible",
            SdpStatus::MaxIter => "max_iter",
            SdpStatus::NumericalFailure => "numerical_failure",
        }
    }
}

impl fmt::Display for SdpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Default cap on the total block dimension, overridable through
/// `NCERT_SDP_MAXDIM`.
pub fn dimension_cap() -> usize {
    std::env::var("NCERT_SDP_MAXDIM").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(2000)
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Relative tolerance on primal/dual residuals and duality gap.
    pub tol: f64,
    pub max_iter: usize,
    pub max_dim: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 150, max_dim: dimension_cap() }
    }
}

/// Infeasibility certificate.
#[derive(Clone, Debug)]
pub enum Ray {
    /// `bᵀy > 0` and `Σ yᵢAᵢ ⪯ 0` (normalized to `max|yᵢ| = 1`); no feasible
    /// `X` exists. `residual` is the positive part of `λ_max(Σ yᵢAᵢ)`.
    Primal { y: Vec<f64>, residual: f64 },
    /// `X ⪰ 0`, `A(X) = 0`, `⟨C,X⟩ < 0`: the objective is unbounded below.
    /// `residual` is `max|⟨Aᵢ,X⟩|` relative to `−⟨C,X⟩`.
    Dual { x: Vec<BlockValue>, residual: f64 },
}

/// Farkas rays are accepted when their residual is below this.
pub const RAY_TOL: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub x: Vec<BlockValue>,
    pub y: Vec<f64>,
    pub s: Vec<BlockValue>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
    pub ray: Option<Ray>,
    /// Optimal phase-I slack for feasibility queries.
    pub slack: Option<f64>,
}

impl SdpSolution {
    fn empty(p: &SdpProblem, status: SdpStatus) -> Self {
        SdpSolution {
            status,
            x: p.blocks().iter().map(|&b| BlockValue::zeros(b)).collect(),
            y: vec![0.0; p.num_constraints()],
            s: p.blocks().iter().map(|&b| BlockValue::zeros(b)).collect(),
            primal_objective: f64::NAN,
            dual_objective: f64::NAN,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
            gap: f64::NAN,
            iterations: 0,
            ray: None,
            slack: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

// ---------------------------------------------------------------------------
// internal problem data

type Entry = (usize, usize, usize, f64);

struct Data {
    blocks: Vec<Block>,
    c: Vec<BlockValue>,
    rows: Vec<Vec<Entry>>,
    b: Vector,
    /// Per block: constraints touching it with their local entries.
    by_block: Vec<Vec<(usize, Vec<(usize, usize, f64)>)>>,
}

fn dense_of(blocks: &[Block], s: &SparseSym) -> Vec<BlockValue> {
    let mut out: Vec<BlockValue> = blocks.iter().map(|&b| BlockValue::zeros(b)).collect();
    for (b, i, j, v) in s.entries() {
        match &mut out[b] {
            BlockValue::Dense(m) => {
                m[(i, j)] += v;
                if i != j {
                    m[(j, i)] += v;
                }
            }
            BlockValue::Diag(d) => d[i] += v,
        }
    }
    out
}

impl Data {
    fn new(blocks: Vec<Block>, c: Vec<BlockValue>, rows: Vec<Vec<Entry>>, b: Vec<f64>) -> Self {
        let mut by_block: Vec<Vec<(usize, Vec<(usize, usize, f64)>)>> = vec![Vec::new(); blocks.len()];
        for (i, row) in rows.iter().enumerate() {
            let mut local: HashMap<usize, Vec<(usize, usize, f64)>> = HashMap::new();
            for &(bk, r, cc, v) in row {
                local.entry(bk).or_default().push((r, cc, v));
            }
            let mut keys: Vec<usize> = local.keys().copied().collect();
            keys.sort_unstable();
            for bk in keys {
                by_block[bk].push((i, local.remove(&bk).unwrap()));
            }
        }
        Data { blocks, c, rows, b: Vector::from_vec(b), by_block }
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.size).sum()
    }

    /// `A(X)`; `X` need not be symmetric.
    fn a_op(&self, x: &[BlockValue]) -> Vector {
        Vector::from_iterator(
            self.m(),
            self.rows.iter().map(|row| {
                row.iter()
                    .map(
                        |&(b, r, c, v)| {
                            if r == c {
                                v * x[b].get(r, r)
                            } else {
                                v * (x[b].get(r, c) + x[b].get(c, r))
                            }
                        },
                    )
                    .sum::<f64>()
            }),
        )
    }

    fn at_op(&self, y: &Vector) -> Vec<BlockValue> {
        let mut out: Vec<BlockValue> = self.blocks.iter().map(|&b| BlockValue::zeros(b)).collect();
        for (i, row) in self.rows.iter().enumerate() {
            let yi = y[i];
            if yi == 0.0 {
                continue;
            }
            for &(b, r, c, v) in row {
                match &mut out[b] {
                    BlockValue::Dense(m) => {
                        m[(r, c)] += yi * v;
                        if r != c {
                            m[(c, r)] += yi * v;
                        }
                    }
                    BlockValue::Diag(d) => d[r] += yi * v,
                }
            }
        }
        out
    }

    /// Schur complement `M_ij = tr(Aᵢ X Aⱼ S⁻¹)`.
    fn schur(&self, x: &[BlockValue], sinv: &[BlockValue]) -> Mat {
        let m = self.m();
        let mut mm = Mat::zeros(m, m);
        for (bi, list) in self.by_block.iter().enumerate() {
            if list.is_empty() {
                continue;
            }
            match (&x[bi], &sinv[bi]) {
                (BlockValue::Dense(xb), BlockValue::Dense(si)) => {
                    let n = xb.nrows();
                    let mut slot = vec![usize::MAX; n];
                    for (j, ej) in list {
                        // X·Aⱼ is nonzero only in the columns Aⱼ touches
                        let mut cols: Vec<usize> = Vec::new();
                        for &(r, c, _) in ej {
                            for k in [r, c] {
                                if slot[k] == usize::MAX {
                                    slot[k] = cols.len();
                                    cols.push(k);
                                }
                            }
                        }
                        let mut g = Mat::zeros(n, cols.len());
                        for &(r, c, v) in ej {
                            g.column_mut(slot[c]).axpy(v, &xb.column(r), 1.0);
                            if r != c {
                                g.column_mut(slot[r]).axpy(v, &xb.column(c), 1.0);
                            }
                        }
                        let srows = si.select_rows(&cols);
                        for &k in &cols {
                            slot[k] = usize::MAX;
                        }
                        let p = &g * srows;
                        for (i, ei) in list {
                            let mut acc = 0.0;
                            for &(r, c, v) in ei {
                                acc += if r == c { v * p[(r, r)] } else { v * (p[(r, c)] + p[(c, r)]) };
                            }
                            mm[(*i, *j)] += acc;
                        }
                    }
                }
                (BlockValue::Diag(xv), BlockValue::Diag(sv)) => {
                    let mut per_k: Vec<Vec<(usize, f64)>> = vec![Vec::new(); xv.len()];
                    for (i, ei) in list {
                        for &(r, _, v) in ei {
                            per_k[r].push((*i, v));
                        }
                    }
                    for (k, lst) in per_k.iter().enumerate() {
                        let d = xv[k] * sv[k];
                        for &(i, a) in lst {
                            for &(j, b) in lst {
                                mm[(i, j)] += a * b * d;
                            }
                        }
                    }
                }
                _ => unreachable!("block kinds are fixed"),
            }
        }
        symmetrize(&mm)
    }
}

enum Factor {
    Chol(Cholesky<f64, Dyn>),
    Lu(LU<f64, Dyn, Dyn>),
}

impl Factor {
    fn new(m: Mat) -> Option<Factor> {
        if let Some(c) = m.clone().cholesky() {
            return Some(Factor::Chol(c));
        }
        let scale = m.diagonal().iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-300);
        for reg in [1e-14, 1e-12, 1e-10] {
            let mut r = m.clone();
            for i in 0..r.nrows() {
                r[(i, i)] += reg * scale;
            }
            if let Some(c) = r.cholesky() {
                return Some(Factor::Chol(c));
            }
        }
        let lu = m.lu();
        if lu.is_invertible() {
            Some(Factor::Lu(lu))
        } else {
            None
        }
    }

    fn solve(&self, b: &Vector) -> Option<Vector> {
        match self {
            Factor::Chol(c) => Some(c.solve(b)),
            Factor::Lu(l) => l.solve(b),
        }
    }
}

/// Largest `α` with `x + α dx ⪰ 0` (infinite if unrestricted).
fn max_step(x: &BlockValue, dx: &BlockValue) -> f64 {
    match (x, dx) {
        (BlockValue::Dense(xm), BlockValue::Dense(d)) => {
            if xm.nrows() == 0 {
                return f64::INFINITY;
            }
            let Some(ch) = xm.clone().cholesky() else {
                return 0.0;
            };
            let l = ch.l();
            let Some(t) = l.solve_lower_triangular(d) else {
                return 0.0;
            };
            let Some(m) = l.solve_lower_triangular(&t.transpose()) else {
                return 0.0;
            };
            let lmin = sym_eigenvalues(&m)[0];
            if lmin >= 0.0 {
                f64::INFINITY
            } else {
                -1.0 / lmin
            }
        }
        (BlockValue::Diag(xv), BlockValue::Diag(d)) => {
            xv.iter().zip(d.iter()).filter(|(_, &dk)| dk < 0.0).map(|(&xk, &dk)| -xk / dk).fold(f64::INFINITY, f64::min)
        }
        _ => unreachable!(),
    }
}

fn inverse(s: &BlockValue) -> Option<BlockValue> {
    match s {
        BlockValue::Dense(m) => {
            if m.nrows() == 0 {
                return Some(s.clone());
            }
            let ch = m.clone().cholesky()?;
            Some(BlockValue::Dense(symmetrize(&ch.inverse())))
        }
        BlockValue::Diag(v) => {
            if v.iter().any(|&a| a <= 0.0) {
                return None;
            }
            Some(BlockValue::Diag(v.map(|a| 1.0 / a)))
        }
    }
}

/// `a · b · c` blockwise (diagonal blocks multiply entrywise).
fn triple(a: &BlockValue, b: &BlockValue, c: &BlockValue) -> BlockValue {
    match (a, b, c) {
        (BlockValue::Dense(a), BlockValue::Dense(b), BlockValue::Dense(c)) => BlockValue::Dense(a * b * c),
        (BlockValue::Diag(a), BlockValue::Diag(b), BlockValue::Diag(c)) => {
            BlockValue::Diag(a.component_mul(b).component_mul(c))
        }
        _ => unreachable!(),
    }
}

fn sym_block(a: BlockValue) -> BlockValue {
    match a {
        BlockValue::Dense(m) => BlockValue::Dense(symmetrize(&m)),
        d => d,
    }
}

struct IpmOut {
    status: SdpStatus,
    x: Vec<BlockValue>,
    y: Vector,
    s: Vec<BlockValue>,
    pobj: f64,
    dobj: f64,
    relp: f64,
    reld: f64,
    gap: f64,
    iterations: usize,
    ray: Option<Ray>,
}

fn ipm(d: &Data, opts: &SolverOptions) -> IpmOut {
    let n = d.dim().max(1) as f64;
    let m = d.m();
    let normb = d.b.norm();
    let normc = blocks_norm(&d.c);
    let sqrt_n = n.sqrt();
    let row_norm: Vec<f64> = d
        .rows
        .iter()
        .map(|r| r.iter().map(|&(_, i, j, v)| if i == j { v * v } else { 2.0 * v * v }).sum::<f64>().sqrt())
        .collect();
    let mut xi = 10f64.max(sqrt_n);
    for i in 0..m {
        xi = xi.max(sqrt_n * (1.0 + d.b[i].abs()) / (1.0 + row_norm[i]));
    }
    let eta = 10f64.max(sqrt_n).max(normc).max(row_norm.iter().copied().fold(0.0, f64::max));
    let mut x: Vec<BlockValue> = d.blocks.iter().map(|&b| BlockValue::identity(b, xi)).collect();
    let mut s: Vec<BlockValue> = d.blocks.iter().map(|&b| BlockValue::identity(b, eta)).collect();
    let mut y = Vector::zeros(m);

    let mut stall = 0;
    let mut iter = 0;
    let mut converged: Option<IpmOut> = None;
    // after the usual criteria hold, take centering steps toward XS = μ_t I
    let mut polish = false;
    let mu_target = 0.1 * opts.tol / sqrt_n;
    let finish = |status, x, y, s, pobj, dobj, relp, reld, gap, iterations, ray| IpmOut {
        status,
        x,
        y,
        s,
        pobj,
        dobj,
        relp,
        reld,
        gap,
        iterations,
        ray,
    };
    loop {
        let ax = d.a_op(&x);
        let rp = &d.b - &ax;
        let aty = d.at_op(&y);
        let mut rd = d.c.clone();
        for (k, r) in rd.iter_mut().enumerate() {
            r.axpy(-1.0, &s[k]);
            r.axpy(-1.0, &aty[k]);
        }
        let pobj = blocks_dot(&d.c, &x);
        let dobj = d.b.dot(&y);
        let xs = blocks_dot(&x, &s);
        let relp = rp.norm() / (1.0 + normb);
        let reld = blocks_norm(&rd) / (1.0 + normc);
        let denom = 1.0 + pobj.abs() + dobj.abs();
        let gap = ((pobj - dobj).abs() / denom).max(xs.max(0.0) / denom);
        debug!("ipm {iter:3}: pobj {pobj:+.9e} dobj {dobj:+.9e} relp {relp:.2e} reld {reld:.2e} gap {gap:.2e}");

        if relp <= opts.tol && reld <= opts.tol && gap <= opts.tol {
            // also ask for ‖XS‖ small; an off-centre final iterate can have a
            // tiny ⟨X,S⟩ while ‖XS‖ is only about its square root
            let compl = x.iter().zip(&s).map(|(a, b)| (a.to_dense() * b.to_dense()).norm_squared()).sum::<f64>().sqrt();
            if compl <= opts.tol || iter >= opts.max_iter {
                return finish(SdpStatus::Optimal, x, y, s, pobj, dobj, relp, reld, gap, iter, None);
            }
            polish = true;
            if converged.is_none() {
                converged = Some(finish(
                    SdpStatus::Optimal,
                    x.clone(),
                    y.clone(),
                    s.clone(),
                    pobj,
                    dobj,
                    relp,
                    reld,
                    gap,
                    iter,
                    None,
                ));
            }
        }
        // improving rays
        if dobj > 0.0 {
            let mut cr = d.c.clone();
            for (k, r) in cr.iter_mut().enumerate() {
                r.axpy(-1.0, &rd[k]);
            }
            if blocks_norm(&cr) / dobj < 1e-9 {
                let ray = Ray::Primal { y: (&y / dobj).iter().copied().collect(), residual: f64::NAN };
                return finish(SdpStatus::PrimalInfeasible, x, y, s, pobj, dobj, relp, reld, gap, iter, Some(ray));
            }
        }
        if pobj < 0.0 && ax.norm() / -pobj < 1e-9 {
            let xr: Vec<BlockValue> = x.iter().map(|b| b.scaled(-1.0 / pobj)).collect();
            let ray = Ray::Dual { x: xr, residual: f64::NAN };
            return finish(SdpStatus::DualInfeasible, x, y, s, pobj, dobj, relp, reld, gap, iter, Some(ray));
        }
        if iter >= opts.max_iter || stall >= 5 || !(pobj.is_finite() && dobj.is_finite()) {
            let status =
                if pobj.is_finite() && dobj.is_finite() { SdpStatus::MaxIter } else { SdpStatus::NumericalFailure };
            return converged.unwrap_or_else(|| finish(status, x, y, s, pobj, dobj, relp, reld, gap, iter, None));
        }
        iter += 1;

        let Some(sinv) = s.iter().map(inverse).collect::<Option<Vec<_>>>() else {
            return converged.unwrap_or_else(|| {
                finish(SdpStatus::NumericalFailure, x, y, s, pobj, dobj, relp, reld, gap, iter, None)
            });
        };
        let mu = xs / n;
        let Some(fact) = Factor::new(d.schur(&x, &sinv)) else {
            return converged.unwrap_or_else(|| {
                finish(SdpStatus::NumericalFailure, x, y, s, pobj, dobj, relp, reld, gap, iter, None)
            });
        };
        let xrds: Vec<BlockValue> = (0..x.len()).map(|k| triple(&x[k], &rd[k], &sinv[k])).collect();

        let direction = |g: Vec<BlockValue>| -> Option<(Vec<BlockValue>, Vector, Vec<BlockValue>)> {
            let rhs = &rp - d.a_op(&g);
            let dy = fact.solve(&rhs)?;
            if dy.iter().any(|v| !v.is_finite()) {
                return None;
            }
            let atdy = d.at_op(&dy);
            let mut ds = rd.clone();
            let mut dx = g;
            for k in 0..ds.len() {
                ds[k].axpy(-1.0, &atdy[k]);
                dx[k].axpy(1.0, &triple(&x[k], &atdy[k], &sinv[k]));
            }
            let dx = dx.into_iter().map(sym_block).collect();
            Some((dx, dy, ds))
        };
        let steps = |dx: &[BlockValue], ds: &[BlockValue]| -> (f64, f64) {
            let ap = x.iter().zip(dx).map(|(a, b)| max_step(a, b)).fold(f64::INFINITY, f64::min);
            let ad = s.iter().zip(ds).map(|(a, b)| max_step(a, b)).fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        let mut g0 = xrds.clone();
        for k in 0..g0.len() {
            g0[k] = g0[k].scaled(-1.0);
            g0[k].axpy(-1.0, &x[k]);
        }
        let g = if polish {
            let mut g = g0;
            for k in 0..g.len() {
                g[k].axpy(mu_target.min(mu), &sinv[k]);
            }
            g
        } else {
            // predictor
            let Some((dxa, _, dsa)) = direction(g0.clone()) else {
                return converged.unwrap_or_else(|| {
                    finish(SdpStatus::NumericalFailure, x, y, s, pobj, dobj, relp, reld, gap, iter, None)
                });
            };
            let (ap, ad) = steps(&dxa, &dsa);
            let (ap, ad) = (ap.min(1.0), ad.min(1.0));
            let mut xa = x.clone();
            let mut sa = s.clone();
            for k in 0..xa.len() {
                xa[k].axpy(ap, &dxa[k]);
                sa[k].axpy(ad, &dsa[k]);
            }
            let mu_aff = blocks_dot(&xa, &sa) / n;
            let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };

            // corrector
            let mut g = g0;
            for k in 0..g.len() {
                g[k].axpy(sigma * mu, &sinv[k]);
                g[k].axpy(-1.0, &triple(&dxa[k], &dsa[k], &sinv[k]));
            }
            g
        };
        let Some((dx, dy, ds)) = direction(g) else {
            return converged.unwrap_or_else(|| {
                finish(SdpStatus::NumericalFailure, x, y, s, pobj, dobj, relp, reld, gap, iter, None)
            });
        };
        let (ap, ad) = steps(&dx, &ds);
        let ap = (0.98 * ap).min(1.0);
        let ad = (0.98 * ad).min(1.0);
        if ap.min(ad) < 1e-8 {
            stall += 1;
        } else {
            stall = 0;
        }
        for k in 0..x.len() {
            x[k].axpy(ap, &dx[k]);
            s[k].axpy(ad, &ds[k]);
        }
        y.axpy(ad, &dy, 1.0);
    }
}

// ---------------------------------------------------------------------------
// presolve

struct Presolved {
    data: Data,
    /// Original index of each kept row.
    kept: Vec<usize>,
    /// Original row norms (rows are scaled to unit norm).
    norms: Vec<f64>,
}

enum Presolve {
    Ready(Presolved),
    Infeasible(Ray),
}

/// Normalizes rows and drops linearly dependent constraints; an inconsistent
/// dependent constraint yields a Farkas ray.
fn presolve(p: &SdpProblem) -> Presolve {
    let m = p.num_constraints();
    let norms: Vec<f64> = p.constraints().iter().map(SparseSym::norm).collect();
    let scale_b = 1.0 + p.rhs().iter().map(|b| b * b).sum::<f64>().sqrt();
    let mut candidates = Vec::new();
    for i in 0..m {
        if norms[i] == 0.0 {
            if p.rhs()[i].abs() > 1e-12 * scale_b {
                let mut y = vec![0.0; m];
                y[i] = p.rhs()[i].signum();
                return Presolve::Infeasible(Ray::Primal { y, residual: 0.0 });
            }
        } else {
            candidates.push(i);
        }
    }
    // Gram matrix of normalized rows
    let mut by_key: HashMap<(usize, usize, usize), Vec<(usize, f64)>> = HashMap::new();
    for (k, &i) in candidates.iter().enumerate() {
        for (b, r, c, v) in p.constraint(i).entries() {
            let w = if r == c { v } else { v * std::f64::consts::SQRT_2 };
            by_key.entry((b, r, c)).or_default().push((k, w / norms[i]));
        }
    }
    let mc = candidates.len();
    let mut kmat = Mat::zeros(mc, mc);
    for list in by_key.values() {
        for &(a, wa) in list {
            for &(b, wb) in list {
                kmat[(a, b)] += wa * wb;
            }
        }
    }
    // pivoted Cholesky
    let mut l = Mat::zeros(mc, mc);
    let mut dres: Vec<f64> = (0..mc).map(|i| kmat[(i, i)]).collect();
    let mut pivoted = vec![false; mc];
    let mut piv = Vec::new();
    for k in 0..mc {
        let Some(j) = (0..mc).filter(|&j| !pivoted[j]).max_by(|&a, &b| dres[a].total_cmp(&dres[b]).then(b.cmp(&a)))
        else {
            break;
        };
        if dres[j] <= 1e-10 {
            break;
        }
        pivoted[j] = true;
        piv.push(j);
        let ljj = dres[j].sqrt();
        l[(j, k)] = ljj;
        for i in 0..mc {
            if pivoted[i] {
                continue;
            }
            let mut v = kmat[(i, j)];
            for t in 0..k {
                v -= l[(i, t)] * l[(j, t)];
            }
            l[(i, k)] = v / ljj;
            dres[i] -= l[(i, k)] * l[(i, k)];
        }
    }
    let mut indep: Vec<usize> = piv.clone();
    indep.sort_unstable();
    let dependent: Vec<usize> = (0..mc).filter(|&j| !pivoted[j]).collect();
    if !dependent.is_empty() {
        debug!("presolve: dropping {} dependent constraints", dependent.len());
        let kii = Mat::from_fn(indep.len(), indep.len(), |a, b| kmat[(indep[a], indep[b])]);
        let chol = kii.cholesky();
        let bn = |k: usize| p.rhs()[candidates[k]] / norms[candidates[k]];
        for &j in &dependent {
            let coef = match &chol {
                Some(ch) => ch.solve(&Vector::from_iterator(indep.len(), indep.iter().map(|&a| kmat[(a, j)]))),
                None => Vector::zeros(indep.len()),
            };
            let combo: f64 = indep.iter().zip(coef.iter()).map(|(&a, c)| c * bn(a)).sum();
            let mag: f64 =
                1.0 + bn(j).abs() + indep.iter().zip(coef.iter()).map(|(&a, c)| (c * bn(a)).abs()).sum::<f64>();
            let resid = bn(j) - combo;
            if resid.abs() > 1e-9 * mag {
                let sign = resid.signum();
                let mut y = vec![0.0; m];
                y[candidates[j]] = sign / norms[candidates[j]];
                for (&a, c) in indep.iter().zip(coef.iter()) {
                    y[candidates[a]] -= sign * c / norms[candidates[a]];
                }
                let residual = primal_ray_residual(p, &mut y);
                return Presolve::Infeasible(Ray::Primal { y, residual });
            }
        }
    }
    let kept: Vec<usize> = indep.iter().map(|&k| candidates[k]).collect();
    let rows: Vec<Vec<Entry>> =
        kept.iter().map(|&i| p.constraint(i).entries().map(|(b, r, c, v)| (b, r, c, v / norms[i])).collect()).collect();
    let b: Vec<f64> = kept.iter().map(|&i| p.rhs()[i] / norms[i]).collect();
    let c = dense_of(p.blocks(), p.objective());
    Presolve::Ready(Presolved { data: Data::new(p.blocks().to_vec(), c, rows, b), kept, norms })
}

impl Presolved {
    fn y_original(&self, y: &Vector, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for (k, &i) in self.kept.iter().enumerate() {
            out[i] = y[k] / self.norms[i];
        }
        out
    }
}

/// Normalizes `y` to `max|yᵢ| = 1` and returns the positive part of
/// `λ_max(Σ yᵢAᵢ)`, or infinity if `bᵀy <= 0`.
fn primal_ray_residual(p: &SdpProblem, y: &mut [f64]) -> f64 {
    let ymax = y.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if ymax == 0.0 {
        return f64::INFINITY;
    }
    for v in y.iter_mut() {
        *v /= ymax;
    }
    let by: f64 = y.iter().zip(p.rhs()).map(|(a, b)| a * b).sum();
    if by <= 0.0 {
        return f64::INFINITY;
    }
    let mut agg = SparseSym::new();
    for (i, &yi) in y.iter().enumerate() {
        for (b, r, c, v) in p.constraint(i).entries() {
            agg.add_entry(b, r, c, yi * v);
        }
    }
    let lmax = dense_of(p.blocks(), &agg)
        .iter()
        .map(|blk| match blk {
            BlockValue::Dense(m) if m.nrows() > 0 => *sym_eigenvalues(m).last().unwrap(),
            BlockValue::Dense(_) => f64::NEG_INFINITY,
            BlockValue::Diag(v) => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
        .fold(f64::NEG_INFINITY, f64::max);
    lmax.max(0.0) / by.min(1.0)
}

fn check_dims(p: &SdpProblem, opts: &SolverOptions) -> Result<()> {
    p.validate()?;
    let dim = p.total_dim();
    if dim > opts.max_dim {
        return Err(Error::DimensionCap { dim, cap: opts.max_dim });
    }
    Ok(())
}

fn infeasible_solution(p: &SdpProblem, ray: Ray) -> SdpSolution {
    let mut sol = SdpSolution::empty(p, SdpStatus::PrimalInfeasible);
    sol.ray = Some(ray);
    sol
}

/// Solves `min ⟨C,X⟩ s.t. ⟨Aᵢ,X⟩ = bᵢ, X ⪰ 0`. When the interior point
/// iteration does not converge, the problem is classified with a phase-I
/// feasibility solve and, if primal feasible, a search for an improving ray.
pub fn solve(p: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    check_dims(p, opts)?;
    let pre = match presolve(p) {
        Presolve::Ready(pre) => pre,
        Presolve::Infeasible(ray) => return Ok(infeasible_solution(p, ray)),
    };
    let out = ipm(&pre.data, opts);
    let m = p.num_constraints();
    let mut sol = SdpSolution {
        status: out.status,
        y: pre.y_original(&out.y, m),
        x: out.x,
        s: out.s,
        primal_objective: out.pobj,
        dual_objective: out.dobj,
        primal_residual: out.relp,
        dual_residual: out.reld,
        gap: out.gap,
        iterations: out.iterations,
        ray: None,
        slack: None,
    };
    match (out.status, out.ray) {
        (SdpStatus::Optimal, _) => return Ok(sol),
        (SdpStatus::PrimalInfeasible, Some(Ray::Primal { y, .. })) => {
            let mut y = pre.y_original(&Vector::from_vec(y), m);
            let residual = primal_ray_residual(p, &mut y);
            if residual <= RAY_TOL {
                sol.ray = Some(Ray::Primal { y, residual });
                return Ok(sol);
            }
        }
        (SdpStatus::DualInfeasible, Some(Ray::Dual { x, .. })) => {
            if let Some(ray) = validate_dual_ray(p, x) {
                sol.ray = Some(ray);
                return Ok(sol);
            }
        }
        _ => {}
    }
    // classify
    let f = feasibility(p, opts)?;
    match f.status {
        SdpStatus::PrimalInfeasible => {
            sol.status = SdpStatus::PrimalInfeasible;
            sol.ray = f.ray;
        }
        SdpStatus::Optimal => {
            if let Some(ray) = find_dual_ray(p, &pre, opts) {
                sol.status = SdpStatus::DualInfeasible;
                sol.ray = Some(ray);
            } else if sol.status != SdpStatus::NumericalFailure {
                sol.status = SdpStatus::MaxIter;
            }
        }
        _ => {}
    }
    Ok(sol)
}

fn validate_dual_ray(p: &SdpProblem, mut x: Vec<BlockValue>) -> Option<Ray> {
    // project onto the cone
    for blk in x.iter_mut() {
        match blk {
            BlockValue::Dense(m) => *m = crate::linalg::sym_apply(m, |v| v.max(0.0)),
            BlockValue::Diag(v) => v.apply(|a| *a = a.max(0.0)),
        }
    }
    let cx = p.objective().dot(&x);
    if cx >= 0.0 {
        return None;
    }
    let viol = p.constraints().iter().map(|a| a.dot(&x).abs() / a.norm().max(1e-300)).fold(0.0, f64::max);
    let residual = viol / -cx;
    let x: Vec<BlockValue> = x.iter().map(|b| b.scaled(-1.0 / cx)).collect();
    (residual <= RAY_TOL).then_some(Ray::Dual { x, residual })
}

/// `min ⟨C,X⟩ s.t. A(X) = 0, tr X = 1`: a negative optimum is an improving ray.
fn find_dual_ray(p: &SdpProblem, pre: &Presolved, opts: &SolverOptions) -> Option<Ray> {
    let mut rows: Vec<Vec<Entry>> = pre.data.rows.clone();
    let mut trace = Vec::new();
    for (b, blk) in p.blocks().iter().enumerate() {
        for i in 0..blk.size {
            trace.push((b, i, i, 1.0 / (p.total_dim() as f64).sqrt()));
        }
    }
    rows.push(trace);
    let mut bvec = vec![0.0; rows.len()];
    bvec[rows.len() - 1] = 1.0 / (p.total_dim() as f64).sqrt();
    let data = Data::new(p.blocks().to_vec(), pre.data.c.clone(), rows, bvec);
    let out = ipm(&data, opts);
    if out.pobj < -1e-7 && out.relp <= 1e-7 {
        return validate_dual_ray(p, out.x);
    }
    None
}

/// Phase-I feasibility: `min Σ(s⁺ + s⁻) s.t. A(X) + s⁺ − s⁻ = b`. Feasible
/// (status `Optimal`) iff the optimal slack is at most `1e−8·(1 + ‖b‖)`;
/// otherwise the phase-I dual is returned as a validated Farkas ray.
pub fn feasibility(p: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    check_dims(p, opts)?;
    let pre = match presolve(p) {
        Presolve::Ready(pre) => pre,
        Presolve::Infeasible(ray) => return Ok(infeasible_solution(p, ray)),
    };
    let m = p.num_constraints();
    let normb = Vector::from_vec(p.rhs().to_vec()).norm();
    let threshold = 1e-8 * (1.0 + normb);
    let mut last = None;
    for reg in [0.0, 1e-9] {
        let (out, slack) = phase_one(&pre, opts, reg);
        let mut sol = SdpSolution {
            status: SdpStatus::Optimal,
            x: out.x[..p.blocks().len()].to_vec(),
            y: pre.y_original(&out.y, m),
            s: out.s[..p.blocks().len()].to_vec(),
            primal_objective: out.pobj,
            dual_objective: out.dobj,
            primal_residual: out.relp,
            dual_residual: out.reld,
            gap: out.gap,
            iterations: out.iterations,
            ray: None,
            slack: Some(slack),
        };
        if slack <= threshold {
            return Ok(sol);
        }
        let mut y = sol.y.clone();
        let residual = primal_ray_residual(p, &mut y);
        if residual <= RAY_TOL && slack > threshold {
            sol.status = SdpStatus::PrimalInfeasible;
            sol.ray = Some(Ray::Primal { y, residual });
            return Ok(sol);
        }
        // weakly feasible systems stall the interior point slack well above
        // zero; try to reach the threshold from the cone side
        let mut x = sol.x.clone();
        super::polish::polish_to(p, &mut x, 500, 0.5 * threshold);
        let polished: f64 = (0..m).map(|i| (p.constraint(i).dot(&x) - p.rhs()[i]).abs()).sum();
        if polished <= threshold {
            log::debug!("phase-I slack {slack:e} reduced to {polished:e} by projection");
            sol.x = x;
            sol.slack = Some(polished);
            return Ok(sol);
        }
        sol.status = if out.status == SdpStatus::Optimal { SdpStatus::NumericalFailure } else { out.status };
        last = Some(sol);
    }
    Ok(last.expect("at least one attempt"))
}

/// Returns the iterate and its slack `Σ(s⁺+s⁻) + ‖r_p‖₁` in original units.
fn phase_one(pre: &Presolved, opts: &SolverOptions, reg: f64) -> (IpmOut, f64) {
    let d = &pre.data;
    let m = d.m();
    let mut blocks = d.blocks.clone();
    let lp = blocks.len();
    blocks.push(Block { kind: BlockKind::Lp, size: 2 * m });
    let mut rows = d.rows.clone();
    for (i, row) in rows.iter_mut().enumerate() {
        row.push((lp, i, i, 1.0));
        row.push((lp, m + i, m + i, -1.0));
    }
    let mut c: Vec<BlockValue> = d.blocks.iter().map(|&b| BlockValue::identity(b, reg)).collect();
    c.push(BlockValue::Diag(Vector::from_element(2 * m, 1.0)));
    let data = Data::new(blocks, c, rows, d.b.iter().copied().collect());
    let tight = SolverOptions { tol: opts.tol.min(1e-10), max_iter: opts.max_iter, max_dim: opts.max_dim };
    let out = ipm(&data, &tight);
    let rp = &data.b - data.a_op(&out.x);
    let mut slack = 0.0;
    if let BlockValue::Diag(sv) = &out.x[lp] {
        for i in 0..m {
            let norm = pre.norms[pre.kept[i]];
            slack += (sv[i] + sv[m + i] + rp[i].abs()) * norm;
        }
    }
    (out, slack)
}
