//! LMI domination `D_{L₁} ⊆ D_{L₂}` decided as feasibility of a unital
//! completely positive map `τ(A₁ℓ) = A₂ℓ`, via its Choi matrix.

use crate::error::{Error, Result};
use crate::linalg::{min_eig, sym_apply, sym_eigen, Mat};
use crate::ncpoly::MatrixTuple;
use crate::pencil::{minimal_defining_pencil, unitarily_equivalent, LinearPencil};
use crate::sdp::{
    face_polish, feasibility, polish, solve, Block, BlockValue, Ray, SdpProblem, SdpStatus, SolverOptions, SparseSym,
};

/// Eigenvalues of the Choi matrix below this fraction of `λ_max` are dropped.
pub const TRUNCATION: f64 = 1e-10;
pub const CERTIFICATE_TOL: f64 = 1e-8;

const BISECT_LO: f64 = 1e-6;
const BISECT_HI: f64 = 1e6;
// final bracket hi/lo; tighter than 1e-3 so the midpoint is within 1e-3 absolute up to ρ = 4
const BISECT_WIDTH: f64 = 2.5e-4;

/// Isometry blocks `Vₘ` (`d₁×d₂`) with `Σ VₘᵀVₘ = I` and `Σ VₘᵀA₁ℓVₘ = A₂ℓ`.
#[derive(Clone, Debug)]
pub struct DominationCertificate {
    pub v: Vec<Mat>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificateResiduals {
    pub isometry: f64,
    pub coefficients: f64,
}

impl CertificateResiduals {
    pub fn max(&self) -> f64 {
        self.isometry.max(self.coefficients)
    }
}

impl DominationCertificate {
    pub fn mu(&self) -> usize {
        self.v.len()
    }

    pub fn residuals(&self, l1: &LinearPencil, l2: &LinearPencil) -> CertificateResiduals {
        let d2 = l2.size();
        let mut iso = -Mat::identity(d2, d2);
        for v in &self.v {
            iso += v.transpose() * v;
        }
        let mut coeff = 0.0f64;
        for (a1, a2) in l1.coeffs().iter().zip(l2.coeffs()) {
            let mut r = -a2.clone();
            for v in &self.v {
                r += v.transpose() * a1 * v;
            }
            coeff = coeff.max(r.amax());
        }
        CertificateResiduals { isometry: iso.amax(), coefficients: coeff }
    }

    /// `Σ (Vₘ⊗I)ᵀ L₁(X) (Vₘ⊗I)`, which equals `L₂(X)`.
    pub fn replay(&self, l1: &LinearPencil, x: &MatrixTuple) -> Result<Mat> {
        let lx = l1.eval(x)?;
        let id = Mat::identity(x.n(), x.n());
        let mut out: Option<Mat> = None;
        for v in &self.v {
            let w = v.kronecker(&id);
            let term = w.transpose() * &lx * w;
            out = Some(match out {
                Some(acc) => acc + term,
                None => term,
            });
        }
        out.ok_or_else(|| Error::InternalConsistency("empty certificate".into()))
    }
}

/// The Farkas functional separating the pencils: symmetric `Z₀, Z₁, …` with
/// `I⊗Z₀ + Σ A₁ℓ⊗Zℓ ⪰ 0` and `tr Z₀ + Σ⟨A₂ℓ, Zℓ⟩ < 0`.
#[derive(Clone, Debug)]
pub struct SeparatingFunctional {
    pub z0: Mat,
    pub z: Vec<Mat>,
    pub value: f64,
    pub residual: f64,
}

/// A point of `D_{L₁} \ D_{L₂}`.
#[derive(Clone, Debug)]
pub struct DominationWitness {
    pub x: MatrixTuple,
    pub l1_min_eig: f64,
    pub l2_min_eig: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DominationStatus {
    Dominated,
    NotDominated,
    PreconditionUnbounded,
}

impl DominationStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            DominationStatus::Dominated => "dominated",
            DominationStatus::NotDominated => "not_dominated",
            DominationStatus::PreconditionUnbounded => "precondition_unbounded",
        }
    }
}

#[derive(Clone, Debug)]
pub struct DominationResult {
    pub status: DominationStatus,
    pub certificate: Option<DominationCertificate>,
    pub residuals: Option<CertificateResiduals>,
    pub dual: Option<SeparatingFunctional>,
    pub witness: Option<DominationWitness>,
    pub note: Option<String>,
}

impl DominationResult {
    pub fn dominated(&self) -> bool {
        self.status == DominationStatus::Dominated
    }

    fn bare(status: DominationStatus) -> Self {
        DominationResult { status, certificate: None, residuals: None, dual: None, witness: None, note: None }
    }
}

fn check_pair(l1: &LinearPencil, l2: &LinearPencil) -> Result<()> {
    l1.require_monic()?;
    l2.require_monic()?;
    if l1.g() != l2.g() {
        return Err(Error::ShapeMismatch(format!("pencils in {} and {} variables", l1.g(), l2.g())));
    }
    Ok(())
}

struct Choi {
    problem: SdpProblem,
    d1: usize,
    d2: usize,
    pairs: Vec<(usize, usize)>,
}

fn choi_system(l1: &LinearPencil, l2: &LinearPencil) -> Choi {
    let (d1, d2) = (l1.size(), l2.size());
    let idx = |p: usize, r: usize| p * d2 + r;
    let pairs: Vec<(usize, usize)> = (0..d2).flat_map(|r| (r..d2).map(move |s| (r, s))).collect();
    let mut problem = SdpProblem::new(vec![Block::psd(d1 * d2)]);
    for &(r, s) in &pairs {
        let mut a = SparseSym::new();
        for p in 0..d1 {
            a.add_functional(0, idx(p, r), idx(p, s), 1.0);
        }
        problem.add_constraint(a, if r == s { 1.0 } else { 0.0 });
    }
    for (a1, a2) in l1.coeffs().iter().zip(l2.coeffs()) {
        for &(r, s) in &pairs {
            let mut a = SparseSym::new();
            for p in 0..d1 {
                for q in 0..d1 {
                    if a1[(p, q)] != 0.0 {
                        a.add_functional(0, idx(p, r), idx(q, s), a1[(p, q)]);
                    }
                }
            }
            problem.add_constraint(a, a2[(r, s)]);
        }
    }
    Choi { problem, d1, d2, pairs }
}

impl Choi {
    /// Reassembles per-constraint multipliers into symmetric `d₂×d₂` blocks.
    fn unpack(&self, y: &[f64]) -> Vec<Mat> {
        let np = self.pairs.len();
        y.chunks(np)
            .map(|chunk| {
                let mut m = Mat::zeros(self.d2, self.d2);
                for (&(r, s), &v) in self.pairs.iter().zip(chunk) {
                    if r == s {
                        m[(r, r)] = v;
                    } else {
                        m[(r, s)] = 0.5 * v;
                        m[(s, r)] = 0.5 * v;
                    }
                }
                m
            })
            .collect()
    }

    fn certificate(&self, c: &Mat) -> DominationCertificate {
        let (vals, vecs) = sym_eigen(c);
        let lmax = vals.iter().fold(0.0f64, |a, &b| a.max(b));
        let mut v = Vec::new();
        for k in (0..vals.len()).rev() {
            if vals[k] < TRUNCATION * lmax || vals[k] <= 0.0 {
                continue;
            }
            let u = vecs.column(k) * vals[k].sqrt();
            v.push(Mat::from_row_slice(self.d1, self.d2, u.as_slice()));
        }
        DominationCertificate { v }
    }
}

fn solver_failure(sol_status: SdpStatus) -> Error {
    Error::Solver(format!("domination SDP ended with status {sol_status}"))
}

/// Verdict only; no extraction.
fn choi_feasible(l1: &LinearPencil, l2: &LinearPencil, opts: &SolverOptions) -> Result<bool> {
    let choi = choi_system(l1, l2);
    let sol = feasibility(&choi.problem, opts)?;
    match sol.status {
        SdpStatus::Optimal => Ok(true),
        SdpStatus::PrimalInfeasible => Ok(false),
        s => Err(solver_failure(s)),
    }
}

pub fn check_domination(l1: &LinearPencil, l2: &LinearPencil) -> Result<DominationResult> {
    check_domination_with(l1, l2, &SolverOptions::default())
}

pub fn check_domination_with(l1: &LinearPencil, l2: &LinearPencil, opts: &SolverOptions) -> Result<DominationResult> {
    check_pair(l1, l2)?;
    if !is_bounded_with(l1, opts)? {
        let mut out = DominationResult::bare(DominationStatus::PreconditionUnbounded);
        out.note = Some("D_L1(1) is unbounded".into());
        return Ok(out);
    }
    dominate_unchecked(l1, l2, opts)
}

fn dominate_unchecked(l1: &LinearPencil, l2: &LinearPencil, opts: &SolverOptions) -> Result<DominationResult> {
    let choi = choi_system(l1, l2);
    let sol = feasibility(&choi.problem, opts)?;
    match sol.status {
        SdpStatus::Optimal => {
            let mut x = sol.x.clone();
            let viol = choi.problem.max_violation(&x);
            if viol > 1e-3 * CERTIFICATE_TOL {
                polish(&choi.problem, &mut x, 20);
                face_polish(&choi.problem, &mut x);
            }
            let c = x[0].to_dense();
            let cert = choi.certificate(&c);
            let res = cert.residuals(l1, l2);
            if res.max() > CERTIFICATE_TOL {
                return Err(Error::Solver(format!(
                    "certificate residuals {:e}/{:e} exceed {CERTIFICATE_TOL:e}",
                    res.isometry, res.coefficients
                )));
            }
            let mut out = DominationResult::bare(DominationStatus::Dominated);
            out.certificate = Some(cert);
            out.residuals = Some(res);
            Ok(out)
        }
        SdpStatus::PrimalInfeasible => {
            let mut out = DominationResult::bare(DominationStatus::NotDominated);
            if let Some(Ray::Primal { y, residual }) = &sol.ray {
                let mut blocks = choi.unpack(y);
                for b in blocks.iter_mut() {
                    *b *= -1.0;
                }
                let z0 = blocks.remove(0);
                let value = z0.trace() + l2.coeffs().iter().zip(&blocks).map(|(a, z)| a.dot(z)).sum::<f64>();
                let dual = SeparatingFunctional { z0, z: blocks, value, residual: *residual };
                match witness_from_dual(l1, l2, &dual) {
                    Some(w) => out.witness = Some(w),
                    None => out.note = Some("separated, no finite witness extracted".into()),
                }
                out.dual = Some(dual);
            }
            Ok(out)
        }
        s => Err(solver_failure(s)),
    }
}

/// With `Z₀ ≻ 0`, `Xℓ = Z₀^{-1/2} Zℓ Z₀^{-1/2}` lies in the closure of
/// `D_{L₁}` and outside `D_{L₂}`; shrinking moves it inside `D_{L₁}`.
fn witness_from_dual(l1: &LinearPencil, l2: &LinearPencil, dual: &SeparatingFunctional) -> Option<DominationWitness> {
    let scale = dual.z0.amax().max(1e-300);
    if min_eig(&dual.z0) <= 1e-10 * scale {
        return None;
    }
    let half_inv = sym_apply(&dual.z0, |v| 1.0 / v.sqrt());
    let base: Vec<Mat> = dual.z.iter().map(|z| crate::linalg::symmetrize(&(&half_inv * z * &half_inv))).collect();
    for eps in [1e-6, 1e-4, 1e-2, 0.1, 0.3] {
        let x = MatrixTuple::symmetric(base.iter().map(|m| m * (1.0 - eps)).collect()).ok()?;
        let m1 = min_eig(&l1.eval(&x).ok()?);
        let m2 = min_eig(&l2.eval(&x).ok()?);
        if m1 > 0.0 && m2 < 0.0 {
            return Some(DominationWitness { x, l1_min_eig: m1, l2_min_eig: m2 });
        }
        if m2 >= 0.0 {
            break;
        }
    }
    None
}

pub fn is_bounded(l: &LinearPencil) -> Result<bool> {
    is_bounded_with(l, &SolverOptions::default())
}

/// `D_L(1)` is bounded iff no `h ≠ 0` has `Σ hⱼAⱼ ⪰ 0`, i.e. iff the `Aⱼ` are
/// linearly independent and some `Y ≻ 0` has `tr(AⱼY) = 0` for all `j`. The
/// latter is decided by maximizing `t` over `Y = Y' + tI`, `Y' ⪰ 0`, `tr Y = 1`.
pub fn is_bounded_with(l: &LinearPencil, opts: &SolverOptions) -> Result<bool> {
    l.require_monic()?;
    let d = l.size();
    let g = l.g();
    let mut gram = Mat::zeros(g, g);
    for i in 0..g {
        for j in 0..g {
            gram[(i, j)] = l.coeffs()[i].dot(&l.coeffs()[j]);
        }
    }
    let (vals, _) = sym_eigen(&gram);
    let top = vals.iter().fold(0.0f64, |a, &b| a.max(b));
    if top == 0.0 || vals[0] <= 1e-12 * top {
        return Ok(false);
    }
    let mut p = SdpProblem::new(vec![Block::psd(d), Block::lp(1)]);
    for a in l.coeffs() {
        let mut row = SparseSym::new();
        for i in 0..d {
            for j in i..d {
                if a[(i, j)] != 0.0 {
                    row.add_functional(0, i, j, if i == j { a[(i, i)] } else { 2.0 * a[(i, j)] });
                }
            }
        }
        row.add_entry(1, 0, 0, a.trace());
        p.add_constraint(row, 0.0);
    }
    let mut tr = SparseSym::new();
    for i in 0..d {
        tr.add_entry(0, i, i, 1.0);
    }
    tr.add_entry(1, 0, 0, d as f64);
    p.add_constraint(tr, 1.0);
    let mut c = SparseSym::new();
    c.add_entry(1, 0, 0, -1.0);
    p.set_objective(c);
    let sol = solve(&p, opts)?;
    match sol.status {
        SdpStatus::Optimal => {
            let t = match &sol.x[1] {
                BlockValue::Diag(v) => v[0],
                BlockValue::Dense(m) => m[(0, 0)],
            };
            Ok(t > 1e-8 / d as f64)
        }
        SdpStatus::PrimalInfeasible => Ok(false),
        s => Err(solver_failure(s)),
    }
}

#[derive(Clone, Debug)]
pub struct RadiusResult {
    pub bounded: bool,
    pub rho: Option<f64>,
    /// Final bracket: not dominated at `lo`, dominated at `hi`.
    pub bracket: Option<(f64, f64)>,
}

/// Monotone bisection for the threshold of `pred` on `[lo, hi]`, where
/// `pred(lo) == !pred(hi)`. Returns the final `(lo, hi)`.
fn bisect(mut lo: f64, mut hi: f64, pred: &mut dyn FnMut(f64) -> Result<bool>, true_at_hi: bool) -> Result<(f64, f64)> {
    while hi / lo > 1.0 + BISECT_WIDTH {
        let mid = (lo * hi).sqrt();
        if pred(mid)? == true_at_hi {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

fn tight() -> SolverOptions {
    SolverOptions { tol: 1e-10, ..SolverOptions::default() }
}

/// Least `ρ` with `D_L ⊆ {ΣXⱼ² ≺ ρ²I}`, by bisection on the ball radius.
pub fn radius(l: &LinearPencil) -> Result<RadiusResult> {
    l.require_monic()?;
    let opts = SolverOptions::default();
    let g = l.g();
    let mut pred = |r: f64| choi_feasible(l, &LinearPencil::ball(g, r)?, &opts);
    if !pred(BISECT_HI)? {
        return Ok(RadiusResult { bounded: false, rho: None, bracket: None });
    }
    if pred(BISECT_LO)? {
        return Ok(RadiusResult { bounded: true, rho: Some(BISECT_LO), bracket: Some((0.0, BISECT_LO)) });
    }
    let (mut lo, mut hi) = bisect(BISECT_LO, BISECT_HI, &mut pred, true)?;
    let t = tight();
    for _ in 0..8 {
        if choi_feasible(l, &LinearPencil::ball(g, hi)?, &t)? {
            break;
        }
        log::warn!("radius: upper endpoint {hi} failed re-verification");
        lo = hi;
        hi *= 1.0 + BISECT_WIDTH;
    }
    for _ in 0..8 {
        if !choi_feasible(l, &LinearPencil::ball(g, lo)?, &t)? {
            break;
        }
        log::warn!("radius: lower endpoint {lo} failed re-verification");
        hi = lo;
        lo /= 1.0 + BISECT_WIDTH;
    }
    Ok(RadiusResult { bounded: true, rho: Some((lo * hi).sqrt()), bracket: Some((lo, hi)) })
}

#[derive(Clone, Debug)]
pub struct CubeResult {
    /// Certified: the cube of half-width `beta` is dominated.
    pub beta: f64,
    /// Certified not dominated.
    pub infeasible_at: f64,
}

/// Largest `β` with `{‖Xⱼ‖ ≤ β} ⊆ D_L`, by bisection on the cube half-width.
pub fn matrix_cube(l: &LinearPencil) -> Result<CubeResult> {
    l.require_monic()?;
    if !is_bounded(l)? {
        return Err(Error::PreconditionUnbounded);
    }
    let opts = SolverOptions::default();
    let g = l.g();
    // {‖Xⱼ‖ < b} ⊆ D_L iff the unit cube lies in D_{L(b·x)}; this keeps the
    // constraint matrices O(1) for small b
    let unit = LinearPencil::cube(g, 1.0)?;
    let feasible = |b: f64, o: &SolverOptions| choi_feasible(&unit, &l.scale_variables(b), o);
    let mut pred = |b: f64| feasible(b, &opts);
    if !pred(BISECT_LO)? {
        return Err(Error::Solver("no cube of half-width 1e-6 is dominated".into()));
    }
    let (mut lo, mut hi) = bisect(BISECT_LO, BISECT_HI, &mut pred, false)?;
    let t = tight();
    for _ in 0..8 {
        if feasible(lo, &t)? {
            break;
        }
        log::warn!("matrix_cube: lower endpoint {lo} failed re-verification");
        hi = lo;
        lo /= 1.0 + BISECT_WIDTH;
    }
    for _ in 0..8 {
        if !feasible(hi, &t)? {
            break;
        }
        log::warn!("matrix_cube: upper endpoint {hi} failed re-verification");
        lo = hi;
        hi *= 1.0 + BISECT_WIDTH;
    }
    Ok(CubeResult { beta: lo, infeasible_at: hi })
}

#[derive(Clone, Debug)]
pub struct SetsEqual {
    pub equal: bool,
    pub forward: bool,
    pub backward: bool,
    pub via: &'static str,
    /// Only computed when `equal`.
    pub minimal_equivalence: Option<bool>,
}

/// `D_{L₁} = D_{L₂}` by mutual domination; when equal the minimal pencils are
/// compared up to unitary equivalence, which must succeed.
pub fn sets_equal(l1: &LinearPencil, l2: &LinearPencil) -> Result<SetsEqual> {
    check_pair(l1, l2)?;
    let opts = SolverOptions::default();
    if !is_bounded_with(l1, &opts)? || !is_bounded_with(l2, &opts)? {
        return Err(Error::PreconditionUnbounded);
    }
    let forward = choi_feasible(l1, l2, &opts)?;
    let backward = choi_feasible(l2, l1, &opts)?;
    let equal = forward && backward;
    let mut minimal_equivalence = None;
    if equal {
        let m1 = minimal_defining_pencil(l1)?;
        let m2 = minimal_defining_pencil(l2)?;
        let eq = unitarily_equivalent(&m1, &m2)?.is_equivalent();
        if !eq {
            return Err(Error::InternalConsistency(format!(
                "equal sets with inequivalent minimal pencils (sizes {} and {})",
                m1.size(),
                m2.size()
            )));
        }
        minimal_equivalence = Some(true);
    }
    Ok(SetsEqual { equal, forward, backward, via: "mutual domination", minimal_equivalence })
}

/// Verdict of `D_{L₁} ⊆ D_{L₂}` without the boundedness precondition check.
pub(crate) fn dominates(l1: &LinearPencil, l2: &LinearPencil) -> Result<bool> {
    check_pair(l1, l2)?;
    choi_feasible(l1, l2, &SolverOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l1() -> LinearPencil {
        LinearPencil::ball(2, 1.0).unwrap()
    }

    fn l2() -> LinearPencil {
        let a1 = Mat::from_row_slice(2, 2, &[1., 0., 0., -1.]);
        let a2 = Mat::from_row_slice(2, 2, &[0., 1., 1., 0.]);
        LinearPencil::monic(vec![a1, a2]).unwrap()
    }

    #[test]
    fn worked_example_dominated() {
        let r = check_domination(&l2(), &l1()).unwrap();
        assert!(r.dominated());
        let res = r.residuals.unwrap();
        assert!(res.max() <= CERTIFICATE_TOL);
        assert!(r.certificate.unwrap().mu() <= 6);
    }

    #[test]
    fn worked_example_not_dominated() {
        let r = check_domination(&l1(), &l2()).unwrap();
        assert_eq!(r.status, DominationStatus::NotDominated);
        let dual = r.dual.unwrap();
        assert!(dual.value < 0.0);
        let w = r.witness.expect("witness");
        assert!(w.l1_min_eig > 0.0 && w.l2_min_eig < 0.0);
    }

    #[test]
    fn self_domination() {
        for l in [l1(), l2(), LinearPencil::cube(2, 1.5).unwrap()] {
            let r = check_domination(&l, &l).unwrap();
            assert!(r.dominated());
            assert!(r.residuals.unwrap().max() <= CERTIFICATE_TOL);
        }
    }

    #[test]
    fn boundedness() {
        assert!(is_bounded(&l1()).unwrap());
        assert!(is_bounded(&l2()).unwrap());
        // a half-plane {1 + x > 0}
        let half = LinearPencil::monic(vec![Mat::from_row_slice(1, 1, &[1.0])]).unwrap();
        assert!(!is_bounded(&half).unwrap());
        // 1 + x1 ⪰ 0 and 1 - x1 ⪰ 0 leaves x2 free
        let strip = LinearPencil::monic(vec![Mat::from_row_slice(2, 2, &[1., 0., 0., -1.]), Mat::zeros(2, 2)]).unwrap();
        assert!(!is_bounded(&strip).unwrap());
        let r = check_domination(&half, &half).unwrap();
        assert_eq!(r.status, DominationStatus::PreconditionUnbounded);
    }

    #[test]
    fn radius_examples() {
        let r = radius(&LinearPencil::ball(2, 2.5).unwrap()).unwrap();
        assert!((r.rho.unwrap() - 2.5).abs() <= 1e-3);
        let r = radius(&LinearPencil::cube(1, 1.0).unwrap()).unwrap();
        assert!((r.rho.unwrap() - 1.0).abs() <= 1e-3);
        let half = LinearPencil::monic(vec![Mat::from_row_slice(1, 1, &[1.0])]).unwrap();
        assert!(!radius(&half).unwrap().bounded);
    }

    #[test]
    fn cube_examples() {
        let c = matrix_cube(&LinearPencil::cube(2, 3.0).unwrap()).unwrap();
        assert!((c.beta - 3.0).abs() <= 1e-3);
        assert!(c.infeasible_at <= c.beta * (1.0 + 2e-3));
        let c = matrix_cube(&LinearPencil::ball(1, 1.0).unwrap()).unwrap();
        assert!((c.beta - 1.0).abs() <= 1e-3);
    }

    #[test]
    fn sets_equal_examples() {
        let s = sets_equal(&l1(), &l2()).unwrap();
        assert!(!s.equal && !s.forward && s.backward);
        let s = sets_equal(&l2(), &l2().direct_sum(&l2()).unwrap()).unwrap();
        assert!(s.equal && s.minimal_equivalence == Some(true));
    }
}
