//! Seeded generators for property tests and the `verify` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::gramian::{LtiSystem, SampledProfile, SystemOptions};
use crate::linalg::Matrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Matrix::new(rows, cols, data).expect("finite gaussian entries")
}

/// Dense `A = G/√n + c·I` with `c ∈ [shift.0, shift.1]`, dense Gaussian `B`,
/// `T ∈ [0.5, 2]` and `α` uniform in `(0.1, 0.9)·mT`.
pub fn random_system<R: Rng>(
    rng: &mut R,
    state_dim: usize,
    actuators: usize,
    shift: (f64, f64),
    options: SystemOptions,
) -> Result<LtiSystem> {
    let n = state_dim;
    let c = rng.random_range(shift.0..=shift.1);
    let a = gaussian_matrix(rng, n, n, 1.0 / (n as f64).sqrt()).add_scaled(&Matrix::identity(n), c);
    let b = gaussian_matrix(rng, n, actuators, 1.0);
    let horizon = rng.random_range(0.5..=2.0);
    let total = actuators as f64 * horizon;
    let budget = rng.random_range(0.1..0.9) * total;
    LtiSystem::new(a, b, horizon, budget, options)
}

/// Random dimensions up to the given bounds, either stable or unstable drift.
pub fn random_system_upto<R: Rng>(
    rng: &mut R,
    max_state: usize,
    max_actuators: usize,
    options: SystemOptions,
) -> Result<LtiSystem> {
    let n = rng.random_range(1..=max_state);
    let m = rng.random_range(1..=max_actuators);
    random_system(rng, n, m, (-1.0, 0.5), options)
}

/// Nonnegative samples on `[0, measure]` with `cells + 1` nodes. Mixes smooth
/// oscillations, plateaus and piecewise-constant runs, so both generic values
/// and exact ties occur.
pub fn random_profile<R: Rng>(rng: &mut R, cells: usize, measure: f64) -> SampledProfile {
    let nodes = cells + 1;
    let values = match rng.random_range(0..3u8) {
        0 => smooth_values(rng, nodes),
        1 => step_values(rng, nodes),
        _ => {
            let level = rng.random_range(0.2..1.5);
            smooth_values(rng, nodes).into_iter().map(|v| v.min(level)).collect()
        }
    };
    SampledProfile::new(0.0, measure, values).expect("generated values are finite and nonnegative")
}

fn smooth_values<R: Rng>(rng: &mut R, nodes: usize) -> Vec<f64> {
    let terms: Vec<(f64, f64, f64)> = (0..rng.random_range(1..=4))
        .map(|_| {
            (
                rng.random_range(0.1..1.0),
                rng.random_range(0.5..12.0),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let offset = rng.random_range(0.0..0.5);
    (0..nodes)
        .map(|k| {
            let x = k as f64 / (nodes - 1) as f64;
            offset + terms.iter().map(|(a, w, p)| a * (w * x + p).sin()).sum::<f64>().abs()
        })
        .collect()
}

fn step_values<R: Rng>(rng: &mut R, nodes: usize) -> Vec<f64> {
    let levels: Vec<f64> = (0..rng.random_range(1..=5))
        .map(|_| rng.random_range(0.0..2.0))
        .collect();
    let mut out = Vec::with_capacity(nodes);
    while out.len() < nodes {
        let run = rng.random_range(1..=nodes.div_ceil(4).max(1));
        let v = levels[rng.random_range(0..levels.len())];
        out.extend(std::iter::repeat_n(v, run.min(nodes - out.len())));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_system() {
        let a = random_system_upto(&mut rng(7), 6, 4, SystemOptions::default()).unwrap();
        let b = random_system_upto(&mut rng(7), 6, 4, SystemOptions::default()).unwrap();
        assert_eq!(a.a(), b.a());
        assert_eq!(a.b(), b.b());
        assert_eq!(a.budget(), b.budget());
    }

    #[test]
    fn budgets_in_range() {
        let mut r = rng(1);
        for _ in 0..50 {
            let s = random_system_upto(
                &mut r,
                4,
                3,
                SystemOptions {
                    cells: 16,
                    ..Default::default()
                },
            )
            .unwrap();
            let total = s.actuators() as f64 * s.horizon();
            assert!(s.budget() > 0.0 && s.budget() < total);
        }
    }

    #[test]
    fn profiles_are_valid() {
        let mut r = rng(3);
        for _ in 0..30 {
            let p = random_profile(&mut r, 64, 1.5);
            assert_eq!(p.values().len(), 65);
            assert!(p.values().iter().all(|&v| v >= 0.0 && v.is_finite()));
        }
    }
}
