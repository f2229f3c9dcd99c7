use ncert::linalg::{random_matrix, random_symmetric, Mat};
use ncert::sdp::{feasibility, solve, Block, BlockValue, SdpProblem, SdpStatus, SolverOptions, SparseSym};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pd(n: usize, rng: &mut ChaCha8Rng) -> Mat {
    let a = random_matrix(n, 1.0, rng);
    &a * a.transpose() + Mat::identity(n, n) * 0.5
}

fn random_sym_constraint(blocks: &[Block], rng: &mut ChaCha8Rng) -> SparseSym {
    let mut a = SparseSym::new();
    for (b, blk) in blocks.iter().enumerate() {
        match blk.kind {
            ncert::sdp::BlockKind::Psd => {
                let m = random_symmetric(blk.size, 1.0, rng);
                for i in 0..blk.size {
                    for j in i..blk.size {
                        a.add_entry(b, i, j, m[(i, j)]);
                    }
                }
            }
            ncert::sdp::BlockKind::Lp => {
                for i in 0..blk.size {
                    a.add_entry(b, i, i, rng.random_range(-1.0..1.0));
                }
            }
        }
    }
    a
}

/// A random problem with a strictly feasible primal point and a strictly
/// feasible dual point, hence a finite optimum.
fn random_problem(rng: &mut ChaCha8Rng) -> SdpProblem {
    let n = rng.random_range(2..=5);
    let lp = rng.random_range(0..=3);
    let mut blocks = vec![Block::psd(n)];
    if lp > 0 {
        blocks.push(Block::lp(lp));
    }
    let mut p = SdpProblem::new(blocks.clone());
    let x0: Vec<BlockValue> = blocks
        .iter()
        .map(|b| match b.kind {
            ncert::sdp::BlockKind::Psd => BlockValue::Dense(random_pd(b.size, rng)),
            ncert::sdp::BlockKind::Lp => {
                BlockValue::Diag(ncert::linalg::Vector::from_fn(b.size, |_, _| rng.random_range(0.5..2.0)))
            }
        })
        .collect();
    let m = rng.random_range(1..=n * (n + 1) / 2);
    let mut y0 = Vec::new();
    let mut constraints = Vec::new();
    for _ in 0..m {
        let a = random_sym_constraint(&blocks, rng);
        let b = a.dot(&x0);
        constraints.push(a.clone());
        y0.push(rng.random_range(-1.0..1.0));
        p.add_constraint(a, b);
    }
    // C = S₀ + Σ y₀ᵢAᵢ with S₀ ≻ 0
    let mut c = SparseSym::new();
    let s0 = random_pd(n, rng);
    for i in 0..n {
        for j in i..n {
            c.add_entry(0, i, j, s0[(i, j)]);
        }
    }
    if lp > 0 {
        for i in 0..lp {
            c.add_entry(1, i, i, rng.random_range(0.5..2.0));
        }
    }
    for (a, y) in constraints.iter().zip(&y0) {
        for (b, i, j, v) in a.entries() {
            c.add_entry(b, i, j, y * v);
        }
    }
    p.set_objective(c);
    p
}

fn dual_slack_product(x: &[BlockValue], s: &[BlockValue]) -> f64 {
    x.iter().zip(s).map(|(a, b)| (a.to_dense() * b.to_dense()).norm().powi(2)).sum::<f64>().sqrt()
}

#[test]
fn weak_duality_and_complementarity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let opts = SolverOptions::default();
    for k in 0..60 {
        let p = random_problem(&mut rng);
        let sol = solve(&p, &opts).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal, "instance {k}");
        assert!(sol.primal_objective >= sol.dual_objective - 1e-7, "instance {k}");
        let xs = dual_slack_product(&sol.x, &sol.s);
        assert!(xs <= 1e-7, "instance {k}: ‖XS‖ = {xs:e}");
        assert!(sol.primal_residual <= 1e-8 && sol.dual_residual <= 1e-8 && sol.gap <= 1e-8, "instance {k}");
        for x in &sol.x {
            assert!(x.min_eig() >= -1e-9, "instance {k}");
        }
    }
}

#[test]
fn solves_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..20 {
        let p = random_problem(&mut rng);
        let a = solve(&p, &SolverOptions::default()).unwrap();
        let b = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(a.status, b.status);
        assert!((a.primal_objective - b.primal_objective).abs() <= 1e-12);
        assert_eq!(a.primal_objective.to_bits(), b.primal_objective.to_bits());
        assert_eq!(a.x, b.x);
    }
}

#[test]
fn strictly_feasible_gram_system() {
    // p = [1, x, x²] G₀ [1, x, x²]ᵀ for a random G₀ ≻ 0; the Gram system
    // Σ_{i+j=k} G[i,j] = p_k has G₀ in its interior
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for k in 0..20 {
        let g0 = random_pd(3, &mut rng);
        let mut p = SdpProblem::new(vec![Block::psd(3)]);
        for deg in 0..=4 {
            let mut a = SparseSym::new();
            let mut target = 0.0;
            for i in 0..3usize {
                for j in i..3usize {
                    if i + j == deg {
                        let w = if i == j { 1.0 } else { 2.0 };
                        a.add_functional(0, i, j, w);
                        target += w * g0[(i, j)];
                    }
                }
            }
            p.add_constraint(a, target);
        }
        let sol = feasibility(&p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal, "instance {k}");
        assert!(sol.slack.unwrap() <= 1e-10, "instance {k}: slack {:e}", sol.slack.unwrap());
    }
}

#[test]
fn trivial_verdicts() {
    let mut p = SdpProblem::new(vec![Block::psd(3)]);
    let mut tr = SparseSym::new();
    for i in 0..3 {
        tr.add_entry(0, i, i, 1.0);
    }
    p.add_constraint(tr, 1.0);
    assert_eq!(feasibility(&p, &SolverOptions::default()).unwrap().status, SdpStatus::Optimal);

    let mut q = SdpProblem::new(vec![Block::psd(3)]);
    let mut e = SparseSym::new();
    e.add_entry(0, 0, 0, 1.0);
    q.add_constraint(e, -1.0);
    let sol = feasibility(&q, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, SdpStatus::PrimalInfeasible);
    assert!(sol.ray.is_some());
}
