use std::collections::HashMap;

use super::{BlockValue, SdpProblem};
use crate::linalg::{sym_apply, sym_eigen, Mat, Vector};

/// `⟨Aᵢ, Aⱼ⟩` for all constraint pairs.
pub(crate) fn constraint_gram(p: &SdpProblem) -> Mat {
    let m = p.num_constraints();
    let mut by_key: HashMap<(usize, usize, usize), Vec<(usize, f64)>> = HashMap::new();
    for i in 0..m {
        for (b, r, c, v) in p.constraint(i).entries() {
            let w = if r == c { v } else { v * std::f64::consts::SQRT_2 };
            by_key.entry((b, r, c)).or_default().push((i, w));
        }
    }
    let mut k = Mat::zeros(m, m);
    for list in by_key.values() {
        for &(a, wa) in list {
            for &(b, wb) in list {
                k[(a, b)] += wa * wb;
            }
        }
    }
    k
}

/// Alternating projections between the affine set `A(X) = b` and the cone,
/// starting from a near-feasible `X`. Returns the final max violation.
pub fn polish(p: &SdpProblem, x: &mut [BlockValue], rounds: usize) -> f64 {
    polish_to(p, x, rounds, 0.0)
}

/// As [`polish`], stopping once the total violation `Σ|⟨Aᵢ,X⟩ − bᵢ|` is at
/// most `target` or progress stalls. `x` always holds the best cone point seen.
pub(crate) fn polish_to(p: &SdpProblem, x: &mut [BlockValue], rounds: usize, target: f64) -> f64 {
    let m = p.num_constraints();
    if m == 0 {
        return 0.0;
    }
    let k = constraint_gram(p);
    let svd = k.svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let total = |x: &[BlockValue]| (0..m).map(|i| (p.constraint(i).dot(x) - p.rhs()[i]).abs()).sum::<f64>();
    let mut best = total(x);
    let mut cur = x.to_vec();
    let mut stalled = 0;
    for _ in 0..rounds {
        if best <= target || best == 0.0 || stalled >= 10 {
            break;
        }
        let r = Vector::from_iterator(m, (0..m).map(|i| p.constraint(i).dot(&cur) - p.rhs()[i]));
        let Ok(z) = svd.solve(&r, 1e-12 * smax) else {
            break;
        };
        let mut trial = cur;
        for i in 0..m {
            if z[i] == 0.0 {
                continue;
            }
            for (b, rr, cc, v) in p.constraint(i).entries() {
                match &mut trial[b] {
                    BlockValue::Dense(mm) => {
                        mm[(rr, cc)] -= z[i] * v;
                        if rr != cc {
                            mm[(cc, rr)] -= z[i] * v;
                        }
                    }
                    BlockValue::Diag(d) => d[rr] -= z[i] * v,
                }
            }
        }
        for blk in trial.iter_mut() {
            match blk {
                BlockValue::Dense(mm) => *mm = sym_apply(mm, |v| v.max(0.0)),
                BlockValue::Diag(d) => d.apply(|a| *a = a.max(0.0)),
            }
        }
        let viol = total(&trial);
        if viol < best * (1.0 - 1e-3) {
            stalled = 0;
        } else {
            stalled += 1;
        }
        if viol < best {
            best = viol;
            x.clone_from_slice(&trial);
        }
        cur = trial;
    }
    p.max_violation(x)
}

/// Gauss-Newton on a low-rank factorization: each dense block is written
/// `V Vᵀ` with `V = Q√Λ` over the eigenvalues above `rel·λ_max` (diagonal
/// blocks as `v²`), and the linearized system `A(X) = b` is solved for the
/// minimum-norm step in `V`. Iterates stay positive semidefinite by
/// construction and the range may rotate, which alternating projections
/// cannot do when the feasible set has no interior. Steps are kept only while
/// the violation drops. Returns the final max violation.
pub fn face_polish(p: &SdpProblem, x: &mut [BlockValue]) -> f64 {
    if p.num_constraints() == 0 {
        return 0.0;
    }
    let start = x.to_vec();
    let mut best = p.max_violation(x);
    // the numerical rank is unknown; each cut starts afresh from `start`
    for rel in [1e-6, 1e-8, 1e-10, 1e-4] {
        if best <= 1e-14 {
            break;
        }
        let mut cur = start.clone();
        let mut cur_viol = p.max_violation(&cur);
        for _ in 0..20 {
            let Some(step) = factor_step(p, &cur, rel) else {
                break;
            };
            let Some((trial, v)) = [1.0, 0.5, 0.25]
                .iter()
                .map(|&t| step.apply(t))
                .map(|t| {
                    let v = p.max_violation(&t);
                    (t, v)
                })
                .find(|(_, v)| *v < cur_viol)
            else {
                break;
            };
            let progress = v < 0.5 * cur_viol;
            cur = trial;
            cur_viol = v;
            if cur_viol <= 1e-14 || !progress {
                break;
            }
        }
        if cur_viol < best {
            best = cur_viol;
            x.clone_from_slice(&cur);
        }
    }
    best
}

struct FactorStep {
    factors: Vec<Mat>,
    deltas: Vec<Mat>,
    diag: Vec<bool>,
}

impl FactorStep {
    fn apply(&self, t: f64) -> Vec<BlockValue> {
        self.factors
            .iter()
            .zip(&self.deltas)
            .zip(&self.diag)
            .map(|((f, d), &diag)| {
                let g = f + d * t;
                if diag {
                    BlockValue::Diag(Vector::from_iterator(g.nrows(), g.column(0).iter().map(|v| v * v)))
                } else {
                    BlockValue::Dense(&g * g.transpose())
                }
            })
            .collect()
    }
}

/// Largest Jacobian (`constraints × factor entries`) attempted.
const FACTOR_STEP_MAX: usize = 20_000_000;

fn factor_step(p: &SdpProblem, x: &[BlockValue], rel: f64) -> Option<FactorStep> {
    let m = p.num_constraints();
    // factors: dense blocks n×r, diagonal blocks as a column of square roots
    let factors: Vec<Mat> = x
        .iter()
        .map(|b| match b {
            BlockValue::Dense(mm) => {
                let (vals, vecs) = sym_eigen(mm);
                let lmax = vals.iter().fold(0.0f64, |a, &v| a.max(v));
                let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > rel * lmax && vals[k] > 0.0).collect();
                Mat::from_fn(mm.nrows(), keep.len(), |i, j| vecs[(i, keep[j])] * vals[keep[j]].sqrt())
            }
            BlockValue::Diag(d) => {
                let lmax = d.iter().fold(0.0f64, |a, &v| a.max(v));
                Mat::from_fn(d.len(), 1, |i, _| if d[i] > rel * lmax { d[i].sqrt() } else { 0.0 })
            }
        })
        .collect();
    let mut offset = Vec::with_capacity(factors.len());
    let mut cols = 0;
    for f in &factors {
        offset.push(cols);
        cols += f.len();
    }
    if cols == 0 || m * cols > FACTOR_STEP_MAX {
        return None;
    }
    // row i is the gradient of ⟨Aᵢ, V Vᵀ⟩: 2 Aᵢ V, or 2 aₖ vₖ on diagonals
    let mut jac = Mat::zeros(m, cols);
    for i in 0..m {
        for (b, r, c, v) in p.constraint(i).entries() {
            let f = &factors[b];
            match &x[b] {
                BlockValue::Dense(_) => {
                    let rk = f.ncols();
                    for k in 0..rk {
                        jac[(i, offset[b] + r + k * f.nrows())] += 2.0 * v * f[(c, k)];
                        if r != c {
                            jac[(i, offset[b] + c + k * f.nrows())] += 2.0 * v * f[(r, k)];
                        }
                    }
                }
                BlockValue::Diag(_) => jac[(i, offset[b] + r)] += 2.0 * v * f[(r, 0)],
            }
        }
    }
    let diag: Vec<bool> = x.iter().map(|b| matches!(b, BlockValue::Diag(_))).collect();
    let zero: Vec<Mat> = factors.iter().map(|f| Mat::zeros(f.nrows(), f.ncols())).collect();
    let mut out = FactorStep { factors, deltas: zero, diag };
    let base = out.apply(0.0);
    let resid = Vector::from_iterator(m, (0..m).map(|i| p.rhs()[i] - p.constraint(i).dot(&base)));
    let normal = &jac * jac.transpose();
    let svd = normal.svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &v| a.max(v));
    let z = svd.solve(&resid, 1e-13 * smax).ok()?;
    let step = jac.transpose() * z;
    for (b, d) in out.deltas.iter_mut().enumerate() {
        for (k, e) in d.iter_mut().enumerate() {
            *e = step[offset[b] + k];
        }
    }
    Some(out)
}
