use actsched::gramian::{self, Interval, LtiSystem, Schedule, SystemOptions};
use actsched::oracle::{compare, knapsack_solve};
use actsched::random::{random_system_upto, rng};
use actsched::scheduler::solve;
use rand::Rng;

fn system(seed: u64, cells: usize) -> LtiSystem {
    let opts = SystemOptions {
        cells,
        ..Default::default()
    };
    random_system_upto(&mut rng(seed), 6, 4, opts).unwrap()
}

#[test]
fn budget_sweep_matches_solver() {
    for seed in 0..3 {
        let sys = system(seed, 4096);
        let total = sys.actuators() as f64 * sys.horizon();
        for k in 1..=20 {
            let s = sys.with_budget(total * k as f64 / 21.0).unwrap();
            let rep = solve(&s).unwrap();
            let cmp = compare(&s, &rep).unwrap();
            assert!(cmp.cost_residual <= 1e-4, "seed {seed} step {k}: {cmp:?}");
            assert!(cmp.sets_agree(), "seed {seed} step {k}: {cmp:?}");
        }
    }
}

#[test]
fn selection_structure() {
    for seed in 10..30 {
        let sys = system(seed, 1024);
        let sel = knapsack_solve(&sys).unwrap();
        assert!(sel.fractional_cells().len() <= 1);
        assert!(sel.total_measure() <= sys.budget() + 1e-12);
        assert!(sel.weights().iter().flatten().all(|&w| (0.0..=1.0).contains(&w)));
    }
}

#[test]
fn oracle_dominates_binary_schedules() {
    let mut r = rng(40);
    for seed in 40..50 {
        let sys = system(seed, 1024);
        let sel = knapsack_solve(&sys).unwrap();
        let h = sys.cell_width();
        for _ in 0..20 {
            // random grid-aligned schedule within the budget
            let mut lists = vec![Vec::new(); sys.actuators()];
            let mut left = sys.budget();
            for list in lists.iter_mut() {
                let len = (r.random_range(0.0..=left.min(sys.horizon())) / h).floor() * h;
                let start = ((r.random_range(0.0..=sys.horizon() - len)) / h).floor() * h;
                if len > 0.0 {
                    list.push(Interval::new(start, start + len));
                    left -= len;
                }
            }
            let s = Schedule::new(lists).unwrap();
            assert!(gramian::budget(&s) <= sys.budget() + 1e-12);
            assert!(sel.schedule_objective(&s) <= sel.objective() * (1.0 + 1e-12));
        }
    }
}

#[test]
fn residual_converges_with_refinement() {
    for seed in 60..66 {
        let base = system(seed, 256);
        let residual = |cells: usize| {
            let s = base.with_cells(cells).unwrap();
            compare(&s, &solve(&s).unwrap()).unwrap().cost_residual
        };
        let r: Vec<f64> = [256, 512, 1024].into_iter().map(residual).collect();
        for w in r.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.0, "seed {seed}: {r:?}");
        }
    }
}
