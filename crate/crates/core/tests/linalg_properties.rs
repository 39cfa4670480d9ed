use actsched::linalg::{mat_exp, propagate, Matrix, UniformGrid};
use actsched::random::{gaussian_matrix, rng};
use proptest::prelude::*;

fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
    a.add_scaled(b, -1.0).max_abs() / b.max_abs().max(1e-300)
}

fn stable(seed: u64, n: usize) -> Matrix {
    let g = gaussian_matrix(&mut rng(seed), n, n, 1.0 / (n as f64).sqrt());
    g.add_scaled(&Matrix::identity(n), -1.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn semigroup(seed in any::<u64>(), n in 1usize..=8, t1 in 0.0f64..3.0, t2 in 0.0f64..3.0) {
        let a = stable(seed, n);
        let lhs = mat_exp(&a, t1).unwrap().matmul(&mat_exp(&a, t2).unwrap());
        let rhs = mat_exp(&a, t1 + t2).unwrap();
        prop_assert!(rel_err(&lhs, &rhs) < 1e-9, "{}", rel_err(&lhs, &rhs));
    }

    #[test]
    fn exponential_is_nonsingular(seed in any::<u64>(), n in 1usize..=8, t in 0.0f64..5.0, shift in -2.0f64..1.0) {
        let a = gaussian_matrix(&mut rng(seed), n, n, 1.0).add_scaled(&Matrix::identity(n), shift);
        let e = mat_exp(&a, t).unwrap();
        let det = e.det().unwrap();
        prop_assert!(det > 0.0);
        // det e^{At} = e^{t tr A}
        let trace: f64 = (0..n).map(|i| a[(i, i)]).sum();
        let want = (t * trace).exp();
        prop_assert!((det - want).abs() <= 1e-8 * want.max(1.0), "{det} vs {want}");
    }
}

#[test]
fn propagate_matches_direct_exponentials() {
    for seed in 0..5 {
        let mut r = rng(seed);
        let a = gaussian_matrix(&mut r, 4, 4, 0.5);
        let b = gaussian_matrix(&mut r, 4, 1, 1.0).column(0);
        let grid = UniformGrid::new(0.0, 2.0, 1000).unwrap();
        let states = propagate(&a, &b, &grid).unwrap();
        assert_eq!(states.len(), 1001);
        for (k, x) in states.iter().enumerate() {
            let want = mat_exp(&a, grid.node(k)).unwrap().mul_vec(&b);
            let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (p, q) in x.iter().zip(&want) {
                assert!((p - q).abs() <= 1e-9 * scale, "seed {seed} node {k}: {p} vs {q}");
            }
        }
    }
}
