//! Discretized reference optimizer.
//!
//! The relaxed problem on a grid is a fractional knapsack: every cell of every
//! actuator is an item of size `h` and value `f_i` averaged over the cell.
//! Cell averages come from Simpson's rule on a grid refined by two, so they
//! are not the trapezoid means the rearrangement works with.

use crate::error::Result;
use crate::gramian::{self, LtiSystem, Schedule};
use crate::scheduler::{Case, SolutionReport};

#[derive(Debug, Clone, PartialEq)]
pub struct CellSelection {
    cell_width: f64,
    /// Cell averages per actuator.
    values: Vec<Vec<f64>>,
    /// Weights in `[0, 1]` per actuator and cell.
    weights: Vec<Vec<f64>>,
    total_measure: f64,
    objective: f64,
}

impl CellSelection {
    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn total_measure(&self) -> f64 {
        self.total_measure
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    /// Cells with weight strictly between 0 and 1, as `(actuator, cell)`.
    pub fn fractional_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, w) in self.weights.iter().enumerate() {
            for (k, &x) in w.iter().enumerate() {
                if x > 0.0 && x < 1.0 {
                    out.push((i, k));
                }
            }
        }
        out
    }

    /// Objective of an arbitrary schedule under the same cell averages.
    pub fn schedule_objective(&self, schedule: &Schedule) -> f64 {
        let coverage = coverage(schedule, self.cell_width, self.cell_count());
        coverage
            .iter()
            .zip(&self.values)
            .map(|(c, v)| c.iter().zip(v).map(|(c, v)| c * v).sum::<f64>())
            .sum()
    }

    fn cell_count(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

fn simpson_cells(nodes: &[f64]) -> Vec<f64> {
    nodes
        .windows(3)
        .step_by(2)
        .map(|w| (w[0] + 4.0 * w[1] + w[2]) / 6.0)
        .collect()
}

/// Greedy fractional knapsack over all `m·K` cells.
pub fn knapsack_solve(system: &LtiSystem) -> Result<CellSelection> {
    let fine = system.with_cells(2 * system.cells())?;
    let values: Vec<Vec<f64>> = gramian::trajectories(&fine)?
        .iter()
        .map(|t| simpson_cells(&t.node_values()))
        .collect();
    let h = system.cell_width();
    let cells = system.cells();

    let mut order: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|i| (0..cells).map(move |k| (i, k)))
        .collect();
    order.sort_unstable_by(|&(i, k), &(j, l)| values[j][l].total_cmp(&values[i][k]).then(i.cmp(&j)).then(k.cmp(&l)));

    let mut weights = vec![vec![0.0; cells]; values.len()];
    let mut remaining = system.budget();
    let mut objective = 0.0;
    let mut total_measure = 0.0;
    for (i, k) in order {
        if remaining <= 0.0 {
            break;
        }
        let w = if remaining >= h { 1.0 } else { remaining / h };
        weights[i][k] = w;
        remaining -= w * h;
        total_measure += w * h;
        objective += w * h * values[i][k];
    }

    Ok(CellSelection {
        cell_width: h,
        values,
        weights,
        total_measure,
        objective,
    })
}

/// Measure of each schedule's overlap with each grid cell.
fn coverage(schedule: &Schedule, h: f64, cells: usize) -> Vec<Vec<f64>> {
    schedule
        .iter()
        .map(|intervals| {
            let mut c = vec![0.0; cells];
            for iv in intervals {
                let first = ((iv.start / h).floor() as usize).min(cells.saturating_sub(1));
                let last = ((iv.end / h).ceil() as usize).min(cells);
                for (k, slot) in c.iter_mut().enumerate().take(last).skip(first) {
                    let lo = iv.start.max(k as f64 * h);
                    let hi = iv.end.min((k + 1) as f64 * h);
                    if hi > lo {
                        *slot += hi - lo;
                    }
                }
            }
            c
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub oracle_objective: f64,
    /// `|oracle − optimal_cost| / max(1, oracle)`.
    pub cost_residual: f64,
    /// `Σ |w·h − coverage|` over all cells.
    pub symmetric_difference: f64,
    /// Largest symmetric difference explained by switching times inside
    /// cells, the fractional cell and, in the flat case, reallocation of the
    /// free measure.
    pub allowance: f64,
}

impl Comparison {
    pub fn sets_agree(&self) -> bool {
        self.symmetric_difference <= self.allowance
    }

    pub fn passes(&self, cost_tol: f64) -> bool {
        self.cost_residual <= cost_tol && self.sets_agree()
    }
}

pub fn compare(system: &LtiSystem, report: &SolutionReport) -> Result<Comparison> {
    let selection = knapsack_solve(system)?;
    Ok(compare_with(system, report, &selection))
}

pub fn compare_with(system: &LtiSystem, report: &SolutionReport, selection: &CellSelection) -> Comparison {
    let oracle = selection.objective();
    let h = selection.cell_width();
    let cover = coverage(&report.canonical, h, system.cells());
    let symmetric_difference = cover
        .iter()
        .zip(selection.weights())
        .map(|(c, w)| c.iter().zip(w).map(|(c, w)| (w * h - c).abs()).sum::<f64>())
        .sum();

    let horizon = system.horizon();
    let edge = 1e-9 * horizon;
    let switches: usize = report
        .canonical
        .iter()
        .flat_map(|ivs| ivs.iter().flat_map(|iv| [iv.start, iv.end]))
        .filter(|&t| t > edge && t < horizon - edge)
        .count();
    let mut allowance = system.flat_tol() + (switches + 1) as f64 * h;
    if report.case == Case::Flat {
        if let Some(dof) = &report.flat_dof {
            allowance += 2.0 * dof.free_measure;
        }
    }

    Comparison {
        oracle_objective: oracle,
        cost_residual: (oracle - report.optimal_cost).abs() / oracle.max(1.0),
        symmetric_difference,
        allowance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gramian::{Interval, SystemOptions, ZeroColumnPolicy};
    use crate::linalg::Matrix;
    use crate::scheduler::solve;

    fn example(gamma_sq: f64) -> LtiSystem {
        let g = gamma_sq.sqrt();
        let a = Matrix::diag(&[0.0, 0.0, 1.0]);
        let b = Matrix::from_rows(&[vec![g, 0.0, 1.0], vec![0.0, g, 1.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let opts = SystemOptions {
            zero_columns: ZeroColumnPolicy::Keep,
            cells: 1024,
            ..Default::default()
        };
        LtiSystem::new(a, b, 2.0, 2.0, opts).unwrap()
    }

    #[test]
    fn simpson_integrates_cubics() {
        let nodes: Vec<f64> = (0..=4).map(|k| (k as f64 * 0.5).powi(3)).collect();
        let cells = simpson_cells(&nodes);
        assert_eq!(cells.len(), 2);
        assert!((cells[0] - 0.25).abs() < 1e-15);
        assert!((cells[1] - 15.0 / 4.0).abs() < 1e-14);
    }

    #[test]
    fn full_budget_selects_everything() {
        let sys = example(1.0).with_budget(6.0 - 1e-3).unwrap();
        let sel = knapsack_solve(&sys).unwrap();
        let ones = sel.weights().iter().flatten().filter(|&&w| w == 1.0).count();
        assert!(ones >= 3 * 1024 - 2);
        assert!(sel.fractional_cells().len() <= 1);
    }

    #[test]
    fn gamma_one_selects_third_actuator() {
        let sel = knapsack_solve(&example(1.0)).unwrap();
        assert!(sel.weights()[0].iter().all(|&w| w == 0.0));
        assert!(sel.weights()[1].iter().all(|&w| w == 0.0));
        assert!(sel.weights()[2].iter().all(|&w| w == 1.0));
        let want = 4.0 + (4f64.exp() - 1.0) / 2.0;
        assert!((sel.objective() - want).abs() / want < 1e-9);
        assert!(sel.total_measure() <= 2.0 + 1e-12);
    }

    #[test]
    fn gamma_eight_takes_level_cells() {
        let sel = knapsack_solve(&example(8.0)).unwrap();
        let t0 = 6f64.ln() / 2.0;
        let want = (2.0 * (2.0 - t0) + (4f64.exp() - (2.0 * t0).exp()) / 2.0) + 8.0 * t0;
        assert!((sel.objective() - want).abs() / want < 1e-5);
        let level: f64 = sel.weights()[..2].iter().flatten().sum::<f64>() * sel.cell_width();
        assert!((level - t0).abs() < 2.0 * sel.cell_width());
        // the fractional cell sits on the level 8
        for (i, k) in sel.fractional_cells() {
            assert!((sel.values()[i][k] - 8.0).abs() <= 1e-9 * 8.0);
        }
    }

    #[test]
    fn compare_matches_solver() {
        for g2 in [1.0, 8.0, 2.0 + 1f64.exp().powi(2)] {
            let sys = example(g2);
            let rep = solve(&sys).unwrap();
            let cmp = compare(&sys, &rep).unwrap();
            assert!(cmp.cost_residual < 1e-4, "{g2}: {cmp:?}");
            assert!(cmp.sets_agree(), "{g2}: {cmp:?}");
        }
    }

    #[test]
    fn schedule_objective_is_bounded_by_optimum() {
        let sys = example(8.0);
        let sel = knapsack_solve(&sys).unwrap();
        let s = Schedule::new(vec![
            vec![Interval::new(0.0, 1.0)],
            vec![],
            vec![Interval::new(1.0, 2.0)],
        ])
        .unwrap();
        assert!(sel.schedule_objective(&s) <= sel.objective());
    }

    #[test]
    fn coverage_splits_cells() {
        let s = Schedule::new(vec![vec![Interval::new(0.25, 1.5)]]).unwrap();
        let c = coverage(&s, 1.0, 2);
        assert_eq!(c, vec![vec![0.75, 0.5]]);
    }
}
