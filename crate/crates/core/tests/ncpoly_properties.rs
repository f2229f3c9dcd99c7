use ncert::linalg::{direct_sum, random_matrix, random_symmetric, sym_eigenvalues, Mat};
use ncert::ncpoly::{MatrixTuple, NcPoly, VariableContext, VariableKind, Word};
use ncert::rat::{rat, ratio, Rat, RatMatrix};
use ncert::Letter;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, rng_seed: RngSeed::Fixed(0), failure_persistence: None, ..ProptestConfig::default() }
}

type RawPoly = Vec<(Vec<(usize, bool)>, i64)>;

fn raw_poly(g: usize, max_len: usize) -> impl Strategy<Value = RawPoly> {
    prop::collection::vec((prop::collection::vec((0..g, any::<bool>()), 0..=max_len), -5i64..=5), 0..6)
}

fn build(ctx: VariableContext, raw: &RawPoly) -> NcPoly {
    let free = ctx.is_free();
    NcPoly::from_terms(
        ctx,
        raw.iter().map(|(letters, c)| {
            (Word::new(letters.iter().map(|&(v, s)| Letter::new(v, s && free)).collect()), rat(*c))
        }),
    )
}

fn random_poly(ctx: VariableContext, max_len: usize, rng: &mut ChaCha8Rng) -> NcPoly {
    let terms = rng.random_range(1..6);
    let free = ctx.is_free();
    NcPoly::from_terms(
        ctx,
        (0..terms).map(|_| {
            let len = rng.random_range(0..=max_len);
            let w =
                Word::new((0..len).map(|_| Letter::new(rng.random_range(0..ctx.g()), free && rng.random())).collect());
            (w, rat(rng.random_range(-5..=5)))
        }),
    )
}

fn random_tuple(ctx: VariableContext, n: usize, rng: &mut ChaCha8Rng) -> MatrixTuple {
    let mats = (0..ctx.g())
        .map(|_| match ctx.kind() {
            VariableKind::Symmetric => random_symmetric(n, 0.5, rng),
            VariableKind::Free => random_matrix(n, 0.5, rng),
        })
        .collect();
    MatrixTuple::new(ctx.kind(), mats).unwrap()
}

fn random_rat_matrix(n: usize, symmetric: bool, rng: &mut ChaCha8Rng) -> RatMatrix {
    let mut m = RatMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if symmetric && j < i {
                m[(i, j)] = m[(j, i)].clone();
            } else {
                m[(i, j)] = ratio(rng.random_range(-6..=6), rng.random_range(1..=4));
            }
        }
    }
    m
}

fn contexts() -> [VariableContext; 2] {
    [VariableContext::symmetric(2), VariableContext::free(2)]
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn involution_laws_symmetric(a in raw_poly(3, 4), b in raw_poly(3, 4)) {
        let ctx = VariableContext::symmetric(3);
        let (p, q) = (build(ctx, &a), build(ctx, &b));
        prop_assert_eq!(p.involution().involution(), p.clone());
        prop_assert_eq!(p.try_add(&q).unwrap().involution(), p.involution().try_add(&q.involution()).unwrap());
        prop_assert_eq!(p.try_mul(&q).unwrap().involution(), q.involution().try_mul(&p.involution()).unwrap());
    }

    #[test]
    fn involution_laws_free(a in raw_poly(2, 4), b in raw_poly(2, 4)) {
        let ctx = VariableContext::free(2);
        let (p, q) = (build(ctx, &a), build(ctx, &b));
        prop_assert_eq!(p.involution().involution(), p.clone());
        prop_assert_eq!(p.try_add(&q).unwrap().involution(), p.involution().try_add(&q.involution()).unwrap());
        prop_assert_eq!(p.try_mul(&q).unwrap().involution(), q.involution().try_mul(&p.involution()).unwrap());
    }

    #[test]
    fn ring_axioms(a in raw_poly(2, 3), b in raw_poly(2, 3), c in raw_poly(2, 3)) {
        let ctx = VariableContext::free(2);
        let (p, q, r) = (build(ctx, &a), build(ctx, &b), build(ctx, &c));
        let left = p.try_mul(&q.try_add(&r).unwrap()).unwrap();
        let right = p.try_mul(&q).unwrap().try_add(&p.try_mul(&r).unwrap()).unwrap();
        prop_assert_eq!(left, right);
        let assoc1 = p.try_mul(&q).unwrap().try_mul(&r).unwrap();
        let assoc2 = p.try_mul(&q.try_mul(&r).unwrap()).unwrap();
        prop_assert_eq!(assoc1, assoc2);
        prop_assert!(p.try_sub(&p).unwrap().is_zero());
        if !p.is_zero() && !q.is_zero() {
            prop_assert_eq!(p.try_mul(&q).unwrap().degree(), p.degree() + q.degree());
        }
    }

    #[test]
    fn format_parse_roundtrip(a in raw_poly(3, 4)) {
        for ctx in [VariableContext::symmetric(3), VariableContext::free(3)] {
            let p = build(ctx, &a);
            prop_assert_eq!(ncert::ncpoly::parse(&p.to_string(), ctx).unwrap(), p);
        }
    }
}

#[test]
fn evaluation_is_a_homomorphism() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for k in 0..200 {
        let ctx = contexts()[k % 2];
        let n = 1 + k % 4;
        let p = random_poly(ctx, 3, &mut rng);
        let q = random_poly(ctx, 3, &mut rng);
        let x = random_tuple(ctx, n, &mut rng);
        let lhs = p.try_mul(&q).unwrap().evaluate(&x).unwrap();
        let rhs = p.evaluate(&x).unwrap() * q.evaluate(&x).unwrap();
        assert!((lhs - rhs).amax() <= 1e-9, "instance {k}");
    }
}

#[test]
fn exact_evaluation_homomorphism_and_transpose() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for k in 0..60 {
        let ctx = contexts()[k % 2];
        let n = 1 + k % 3;
        let p = random_poly(ctx, 3, &mut rng);
        let q = random_poly(ctx, 2, &mut rng);
        let x: Vec<RatMatrix> = (0..ctx.g()).map(|_| random_rat_matrix(n, !ctx.is_free(), &mut rng)).collect();
        let pq = p.try_mul(&q).unwrap().evaluate_exact(&x).unwrap();
        let prod = p.evaluate_exact(&x).unwrap().checked_mul(&q.evaluate_exact(&x).unwrap()).unwrap();
        assert_eq!(pq, prod, "instance {k}");
        assert_eq!(p.involution().evaluate_exact(&x).unwrap(), p.evaluate_exact(&x).unwrap().transpose());
    }
}

#[test]
fn direct_sum_compatibility() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let ctx = VariableContext::symmetric(2);
    for k in 0..100 {
        let raw = random_poly(ctx, 3, &mut rng);
        let p = raw.try_add(&raw.involution()).unwrap();
        let x = random_tuple(ctx, 1 + k % 3, &mut rng);
        let y = random_tuple(ctx, 1 + (k / 3) % 3, &mut rng);
        let joint = p.evaluate(&x.direct_sum(&y).unwrap()).unwrap();
        let split = direct_sum(&p.evaluate(&x).unwrap(), &p.evaluate(&y).unwrap());
        let (mut a, mut b) = (sym_eigenvalues(&joint), sym_eigenvalues(&split));
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (s, t) in a.iter().zip(&b) {
            assert!((s - t).abs() <= 1e-9, "instance {k}: {s} vs {t}");
        }
    }
}

#[test]
fn taylor_remainder_is_cubic() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let ctx = VariableContext::symmetric(2);
    for k in 0..20 {
        let mut p = NcPoly::zero(ctx);
        for _ in 0..4 {
            let mut m = random_poly(ctx, 4, &mut rng);
            m = m.try_add(&m.involution()).unwrap();
            p = p.try_add(&m).unwrap();
        }
        // make sure there is a cubic part so the remainder really is O(t³)
        p = p.try_add(&ncert::ncpoly::parse("x^3 + x*y*x", ctx).unwrap()).unwrap();
        let d1 = p.directional_derivative(1).unwrap();
        let d2 = p.directional_derivative(2).unwrap();
        let x = random_tuple(ctx, 3, &mut rng);
        let h = random_tuple(ctx, 3, &mut rng);
        let px = p.evaluate(&x).unwrap();
        let p1 = d1.evaluate(&x, &h).unwrap();
        let p2 = d2.evaluate(&x, &h).unwrap();
        let err = |t: f64| -> f64 {
            let shifted: Vec<Mat> = x.matrices().iter().zip(h.matrices()).map(|(a, b)| a + b * t).collect();
            let pt = p.evaluate(&MatrixTuple::new(ctx.kind(), shifted).unwrap()).unwrap();
            (pt - &px - &p1 * t - &p2 * (t * t / 2.0)).norm()
        };
        let e: Vec<f64> = [1e-1, 1e-2, 1e-3].iter().map(|&t| err(t)).collect();
        let order = (e[1] / e[2]).log10();
        assert!(order >= 2.9, "instance {k}: errors {e:?}, observed order {order}");
        assert!((e[0] / e[1]).log10() >= 2.5, "instance {k}: errors {e:?}");
    }
}

#[test]
fn midpoint_identity_for_square_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let ctx = VariableContext::symmetric(1);
    let sq = ncert::ncpoly::parse("x^2", ctx).unwrap();
    for k in 0..50 {
        let n = 1 + k % 4;
        let x = random_rat_matrix(n, true, &mut rng);
        let y = random_rat_matrix(n, true, &mut rng);
        let t: Rat = ratio(rng.random_range(0..=7), 7);
        let one_minus = rat(1) - &t;
        let combo = x.scale(&t).checked_add(&y.scale(&one_minus)).unwrap();
        let lhs = sq
            .evaluate_exact(&[x.clone()])
            .unwrap()
            .scale(&t)
            .checked_add(&sq.evaluate_exact(&[y.clone()]).unwrap().scale(&one_minus))
            .unwrap()
            .checked_add(&sq.evaluate_exact(&[combo]).unwrap().scale(&rat(-1)))
            .unwrap();
        let diff = x.checked_add(&y.scale(&rat(-1))).unwrap();
        let rhs = diff.checked_mul(&diff).unwrap().scale(&(&t * &one_minus));
        assert_eq!(lhs, rhs, "instance {k}");
    }
}

#[test]
fn trace_is_invariant_under_cyclic_reduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for k in 0..200 {
        let ctx = contexts()[k % 2];
        let p = random_poly(ctx, 4, &mut rng);
        let x = random_tuple(ctx, 1 + k % 4, &mut rng);
        let a = p.evaluate(&x).unwrap().trace();
        let b = p.cyclic_reduce().evaluate(&x).unwrap().trace();
        assert!((a - b).abs() <= 1e-9, "instance {k}: {a} vs {b}");
    }
}
