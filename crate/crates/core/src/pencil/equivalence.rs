use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::LinearPencil;
use crate::error::{Error, Result};
use crate::linalg::{null_space, sym_eigen, symmetrize, Mat, Vector};

pub const WITNESS_SEED: u64 = 0x5EED;
const TRACE_TOL: f64 = 1e-8;
const WITNESS_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub enum Equivalence {
    /// `UᵀAⱼU = Bⱼ` for the orthogonal `U`.
    Equivalent(Mat),
    /// Traces agree but no orthogonal witness passed validation.
    EquivalentNoWitness,
    NotEquivalent,
}

impl Equivalence {
    pub fn is_equivalent(&self) -> bool {
        !matches!(self, Equivalence::NotEquivalent)
    }

    pub fn witness(&self) -> Option<&Mat> {
        match self {
            Equivalence::Equivalent(u) => Some(u),
            _ => None,
        }
    }
}

fn stack(a: &Mat, b: &Mat) -> Vector {
    Vector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// Trace criterion over words of length up to `2d²`. Words are generated
/// breadth first; a word whose joint value `(w(A), w(B))` lies in the span of
/// earlier ones is not extended, since its traces (and those of all its
/// extensions) are then determined by the earlier ones.
fn traces_agree(a: &[Mat], b: &[Mat]) -> bool {
    let d = a[0].nrows();
    let max_len = 2 * d * d;
    let id = Mat::identity(d, d);
    let mut basis: Vec<Vector> = vec![stack(&id, &id).normalize()];
    let mut frontier = vec![(id.clone(), id)];
    // parents have unit joint norm, so anything this small is a vanishing word
    let zero = 1e-10 * a.iter().chain(b).map(|m| m.norm()).fold(0.0, f64::max);
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (wa, wb) in &frontier {
            for (aj, bj) in a.iter().zip(b) {
                let na = aj * wa;
                let nb = bj * wb;
                let v = stack(&na, &nb);
                let nv = v.norm();
                if nv <= zero {
                    continue;
                }
                let (na, nb, v) = (na / nv, nb / nv, v / nv);
                let (ta, tb) = (na.trace(), nb.trace());
                if (ta - tb).abs() > TRACE_TOL * (1.0 + ta.abs().max(tb.abs())) {
                    return false;
                }
                let mut r = v;
                for _ in 0..2 {
                    for q in &basis {
                        let c = q.dot(&r);
                        r -= q * c;
                    }
                }
                let nr = r.norm();
                if nr <= 1e-9 {
                    continue;
                }
                basis.push(r / nr);
                next.push((na, nb));
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    true
}

/// Stacked `I⊗Aⱼ − Bⱼᵀ⊗I`, whose kernel is `{vec T : AⱼT = TBⱼ}`.
fn intertwiner_system(a: &[Mat], b: &[Mat]) -> Mat {
    let d = a[0].nrows();
    let id = Mat::identity(d, d);
    let dd = d * d;
    let mut k = Mat::zeros(a.len() * dd, dd);
    for (j, (aj, bj)) in a.iter().zip(b).enumerate() {
        let blk = id.kronecker(aj) - bj.transpose().kronecker(&id);
        k.view_mut((j * dd, 0), (dd, dd)).copy_from(&blk);
    }
    k
}

fn random_combination(ns: &Mat, rng: &mut ChaCha8Rng) -> Mat {
    let d = (ns.nrows() as f64).sqrt().round() as usize;
    let c = Vector::from_iterator(ns.ncols(), (0..ns.ncols()).map(|_| StandardNormal.sample(rng)));
    let t = ns * c;
    Mat::from_column_slice(d, d, t.as_slice())
}

fn witness(a: &[Mat], b: &[Mat]) -> Option<Mat> {
    let ns = null_space(&intertwiner_system(a, b), 1e-9, 1e-12);
    if ns.ncols() == 0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(WITNESS_SEED);
    for _ in 0..4 {
        let t = random_combination(&ns, &mut rng);
        let svd = t.svd(true, true);
        let u = svd.u? * svd.v_t?;
        let res = a.iter().zip(b).map(|(aj, bj)| (u.transpose() * aj * &u - bj).amax()).fold(0.0, f64::max);
        if res <= WITNESS_TOL {
            return Some(u);
        }
    }
    None
}

/// Decides whether `Bⱼ = UᵀAⱼU` for some orthogonal `U`.
pub fn unitarily_equivalent(l: &LinearPencil, m: &LinearPencil) -> Result<Equivalence> {
    l.require_monic()?;
    m.require_monic()?;
    if l.g() != m.g() {
        return Err(Error::ShapeMismatch(format!("pencils in {} and {} variables", l.g(), m.g())));
    }
    if l.size() != m.size() {
        return Ok(Equivalence::NotEquivalent);
    }
    if !traces_agree(l.coeffs(), m.coeffs()) {
        return Ok(Equivalence::NotEquivalent);
    }
    Ok(match witness(l.coeffs(), m.coeffs()) {
        Some(u) => Equivalence::Equivalent(u),
        None => Equivalence::EquivalentNoWitness,
    })
}

/// Splits a monic pencil into irreducible blocks `QᵀAⱼQ` using the
/// eigenspaces of a random symmetric element of the commutant.
pub fn irreducible_blocks(l: &LinearPencil) -> Result<Vec<LinearPencil>> {
    l.require_monic()?;
    let d = l.size();
    let a = l.coeffs();
    let ns = null_space(&intertwiner_system(a, a), 1e-9, 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(WITNESS_SEED);
    let h = symmetrize(&random_combination(&ns, &mut rng));
    let (vals, vecs) = sym_eigen(&h);
    let spread = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for k in 0..d {
        match clusters.last_mut() {
            Some(c) if vals[k] - vals[*c.last().unwrap()] <= 1e-6 * spread => c.push(k),
            _ => clusters.push(vec![k]),
        }
    }
    clusters
        .into_iter()
        .map(|c| {
            let q = Mat::from_columns(&c.iter().map(|&k| vecs.column(k).into_owned()).collect::<Vec<_>>());
            l.conjugate(&q)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_orthogonal, random_symmetric};

    fn random_pencil(d: usize, g: usize, seed: u64) -> LinearPencil {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        LinearPencil::monic((0..g).map(|_| random_symmetric(d, 1.0, &mut rng)).collect()).unwrap()
    }

    #[test]
    fn conjugated_pencil_is_equivalent() {
        let l = random_pencil(3, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_orthogonal(3, &mut rng);
        let m = l.conjugate(&u).unwrap();
        let e = unitarily_equivalent(&l, &m).unwrap();
        let w = e.witness().expect("witness");
        for (a, b) in l.coeffs().iter().zip(m.coeffs()) {
            assert!((w.transpose() * a * w - b).amax() <= WITNESS_TOL);
        }
    }

    #[test]
    fn permuted_diagonal() {
        let l = LinearPencil::monic(vec![Mat::from_diagonal(&Vector::from_vec(vec![1.0, 2.0]))]).unwrap();
        let m = LinearPencil::monic(vec![Mat::from_diagonal(&Vector::from_vec(vec![2.0, 1.0]))]).unwrap();
        let u = unitarily_equivalent(&l, &m).unwrap();
        let w = u.witness().unwrap();
        assert!((w.abs() - Mat::from_row_slice(2, 2, &[0., 1., 1., 0.])).amax() < 1e-9);
    }

    #[test]
    fn inequivalent_pencils() {
        let ball = LinearPencil::ball(2, 1.0).unwrap();
        let l2 = LinearPencil::monic(vec![
            Mat::from_row_slice(2, 2, &[1., 0., 0., -1.]),
            Mat::from_row_slice(2, 2, &[0., 1., 1., 0.]),
        ])
        .unwrap();
        assert!(matches!(unitarily_equivalent(&ball, &l2).unwrap(), Equivalence::NotEquivalent));
        let a = random_pencil(3, 2, 5);
        let b = random_pencil(3, 2, 6);
        assert!(matches!(unitarily_equivalent(&a, &b).unwrap(), Equivalence::NotEquivalent));
        // same spectra per coefficient, different joint structure
        let p = LinearPencil::monic(vec![
            Mat::from_diagonal(&Vector::from_vec(vec![1.0, 0.0])),
            Mat::from_diagonal(&Vector::from_vec(vec![1.0, 0.0])),
        ])
        .unwrap();
        let q = LinearPencil::monic(vec![
            Mat::from_diagonal(&Vector::from_vec(vec![1.0, 0.0])),
            Mat::from_diagonal(&Vector::from_vec(vec![0.0, 1.0])),
        ])
        .unwrap();
        assert!(matches!(unitarily_equivalent(&p, &q).unwrap(), Equivalence::NotEquivalent));
        let nonmonic = LinearPencil::new(Mat::identity(2, 2) * 2.0, vec![Mat::identity(2, 2)]).unwrap();
        assert!(matches!(unitarily_equivalent(&nonmonic, &nonmonic), Err(Error::NonMonic)));
    }

    #[test]
    fn blocks_of_direct_sum() {
        let a = random_pencil(2, 2, 7);
        let b = random_pencil(3, 2, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_orthogonal(5, &mut rng);
        let l = a.direct_sum(&b).unwrap().conjugate(&u).unwrap();
        let blocks = irreducible_blocks(&l).unwrap();
        let mut sizes: Vec<usize> = blocks.iter().map(LinearPencil::size).collect();
        sizes.sort();
        assert_eq!(sizes, vec![2, 3]);
        for blk in &blocks {
            let other = if blk.size() == 2 { &a } else { &b };
            assert!(unitarily_equivalent(blk, other).unwrap().witness().is_some());
        }
        let dup = a.direct_sum(&a).unwrap();
        let blocks = irreducible_blocks(&dup).unwrap();
        assert_eq!(blocks.len(), 2);
        assert!(blocks.iter().all(|b| b.size() == 2 && b.is_monic()));
    }
}
