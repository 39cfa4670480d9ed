//! Problem instance, per-actuator gain profiles `f_i(t) = ‖e^{At} b_i‖²`,
//! their concatenation on `[0, mT]`, and the trace objective of a schedule.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, UniformGrid};

pub const DEFAULT_CELLS: usize = 4096;
pub const DEFAULT_TIE_TOL: f64 = 1e-9;
pub const MIN_CELLS: usize = 16;

/// What to do with zero columns of `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroColumnPolicy {
    /// Refuse the instance.
    #[default]
    Reject,
    /// Delete the columns; surviving actuators keep their original labels.
    Drop,
    /// Keep them as actuators with an identically zero profile.
    Keep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemOptions {
    /// Grid cells per actuator (`K`).
    pub cells: usize,
    /// Relative tolerance under which two profile values count as equal.
    pub tie_tol: f64,
    /// Measure slack for flat-interval detection; `None` means two cells.
    pub flat_tol: Option<f64>,
    pub zero_columns: ZeroColumnPolicy,
}

impl Default for SystemOptions {
    fn default() -> Self {
        Self {
            cells: DEFAULT_CELLS,
            tie_tol: DEFAULT_TIE_TOL,
            flat_tol: None,
            zero_columns: ZeroColumnPolicy::Reject,
        }
    }
}

/// Validated instance: `ẋ = Ax + BVu` on `[0, T]` with actuation budget `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    a: Matrix,
    b: Matrix,
    horizon: f64,
    budget: f64,
    cells: usize,
    tie_tol: f64,
    flat_tol: f64,
    flat_tol_explicit: bool,
    zero_columns: ZeroColumnPolicy,
    labels: Vec<usize>,
}

impl LtiSystem {
    pub fn new(a: Matrix, b: Matrix, horizon: f64, budget: f64, options: SystemOptions) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        if b.rows() != a.rows() {
            return Err(Error::DimensionMismatch(format!(
                "A is {n}x{n} but B has {} rows",
                b.rows(),
                n = a.rows()
            )));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidSystem(format!("horizon T = {horizon} must be positive")));
        }
        if options.cells < MIN_CELLS {
            return Err(Error::InvalidSystem(format!(
                "K = {} cells per actuator, need at least {MIN_CELLS}",
                options.cells
            )));
        }
        if !(options.tie_tol > 0.0 && options.tie_tol < 1e-2) {
            return Err(Error::InvalidSystem(format!(
                "tie_tol = {} must lie in (0, 1e-2)",
                options.tie_tol
            )));
        }
        if let Some(ft) = options.flat_tol {
            if !(ft.is_finite() && ft >= 0.0) {
                return Err(Error::InvalidSystem(format!("flat_tol = {ft} must be >= 0")));
            }
        }

        let zero: Vec<usize> = (0..b.cols())
            .filter(|&j| b.column(j).iter().all(|v| *v == 0.0))
            .collect();
        let (b, labels) = match (options.zero_columns, zero.first()) {
            (ZeroColumnPolicy::Reject, Some(&j)) => return Err(Error::ZeroColumn { index: j + 1 }),
            (ZeroColumnPolicy::Drop, Some(_)) => {
                let keep: Vec<usize> = (0..b.cols()).filter(|j| !zero.contains(j)).collect();
                if keep.is_empty() {
                    return Err(Error::InvalidSystem("every column of B is zero".into()));
                }
                let labels = keep.iter().map(|j| j + 1).collect();
                (b.select_columns(&keep), labels)
            }
            _ => {
                let labels = (1..=b.cols()).collect();
                (b, labels)
            }
        };

        let m = b.cols() as f64;
        if !(budget.is_finite() && budget > 0.0 && budget < m * horizon) {
            return Err(Error::InvalidSystem(format!(
                "alpha = {budget} must lie in (0, mT) = (0, {})",
                m * horizon
            )));
        }

        let cell_width = horizon / options.cells as f64;
        Ok(Self {
            a,
            b,
            horizon,
            budget,
            cells: options.cells,
            tie_tol: options.tie_tol,
            flat_tol: options.flat_tol.unwrap_or(2.0 * cell_width),
            flat_tol_explicit: options.flat_tol.is_some(),
            zero_columns: options.zero_columns,
            labels,
        })
    }

    fn options(&self) -> SystemOptions {
        SystemOptions {
            cells: self.cells,
            tie_tol: self.tie_tol,
            flat_tol: self.flat_tol_explicit.then_some(self.flat_tol),
            zero_columns: ZeroColumnPolicy::Keep,
        }
    }

    /// Same dynamics with a different budget.
    pub fn with_budget(&self, budget: f64) -> Result<Self> {
        let mut sys = Self::new(self.a.clone(), self.b.clone(), self.horizon, budget, self.options())?;
        sys.labels = self.labels.clone();
        sys.zero_columns = self.zero_columns;
        Ok(sys)
    }

    /// Same instance on a grid with `cells` cells per actuator.
    pub fn with_cells(&self, cells: usize) -> Result<Self> {
        let mut opts = self.options();
        opts.cells = cells;
        let mut sys = Self::new(self.a.clone(), self.b.clone(), self.horizon, self.budget, opts)?;
        sys.labels = self.labels.clone();
        sys.zero_columns = self.zero_columns;
        Ok(sys)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn actuators(&self) -> usize {
        self.b.cols()
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn cell_width(&self) -> f64 {
        self.horizon / self.cells as f64
    }

    pub fn tie_tol(&self) -> f64 {
        self.tie_tol
    }

    pub fn flat_tol(&self) -> f64 {
        self.flat_tol
    }

    pub fn zero_columns(&self) -> ZeroColumnPolicy {
        self.zero_columns
    }

    /// 1-based column labels of the original `B` for each actuator.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn grid(&self) -> UniformGrid {
        UniformGrid {
            start: 0.0,
            end: self.horizon,
            cells: self.cells,
        }
    }

    fn check_actuator(&self, i: usize) -> Result<()> {
        if i >= self.actuators() {
            return Err(Error::DimensionMismatch(format!(
                "actuator index {i} out of range for m = {}",
                self.actuators()
            )));
        }
        Ok(())
    }
}

/// Nonnegative function sampled on a uniform grid.
///
/// A profile consists of one or more equal-length pieces laid side by side,
/// each with its own node list, so that a concatenation can jump at the
/// joins. Cell values are trapezoid means of adjacent nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    domain_start: f64,
    domain_end: f64,
    pieces: Vec<Vec<f64>>,
    actuator: Option<usize>,
}

impl SampledProfile {
    pub fn new(domain_start: f64, domain_end: f64, values: Vec<f64>) -> Result<Self> {
        Self::from_pieces(domain_start, domain_end, vec![values])
    }

    fn from_pieces(domain_start: f64, domain_end: f64, pieces: Vec<Vec<f64>>) -> Result<Self> {
        if !(domain_start.is_finite() && domain_end.is_finite()) || domain_end <= domain_start {
            return Err(Error::InvalidSystem(format!(
                "profile domain [{domain_start}, {domain_end}] is empty"
            )));
        }
        let nodes = pieces.first().map_or(0, Vec::len);
        if nodes < 2 || pieces.iter().any(|p| p.len() != nodes) {
            return Err(Error::DimensionMismatch(
                "profile pieces need equal node counts of at least 2".into(),
            ));
        }
        for (index, &value) in pieces.iter().flatten().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite("profile values"));
            }
            if value < 0.0 {
                return Err(Error::NegativeValue { index, value });
            }
        }
        Ok(Self {
            domain_start,
            domain_end,
            pieces,
            actuator: None,
        })
    }

    /// Lays `parts` side by side. All parts must share one node count and
    /// one domain length.
    pub fn concat(parts: &[SampledProfile]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::DimensionMismatch("nothing to concatenate".into()))?;
        let len = first.measure();
        if parts.iter().any(|p| (p.measure() - len).abs() > 1e-12 * len) {
            return Err(Error::DomainMismatch);
        }
        let pieces: Vec<Vec<f64>> = parts.iter().flat_map(|p| p.pieces.iter().cloned()).collect();
        let total = first.domain_start + len * parts.len() as f64;
        Self::from_pieces(first.domain_start, total, pieces)
    }

    pub fn with_actuator(mut self, actuator: usize) -> Self {
        self.actuator = Some(actuator);
        self
    }

    pub fn actuator(&self) -> Option<usize> {
        self.actuator
    }

    pub fn domain_start(&self) -> f64 {
        self.domain_start
    }

    pub fn domain_end(&self) -> f64 {
        self.domain_end
    }

    pub fn measure(&self) -> f64 {
        self.domain_end - self.domain_start
    }

    pub fn pieces(&self) -> &[Vec<f64>] {
        &self.pieces
    }

    /// Node values of a single-piece profile (first piece otherwise).
    pub fn values(&self) -> &[f64] {
        &self.pieces[0]
    }

    pub fn cell_count(&self) -> usize {
        self.pieces.len() * (self.pieces[0].len() - 1)
    }

    pub fn cell_width(&self) -> f64 {
        self.measure() / self.cell_count() as f64
    }

    pub fn cell_values(&self) -> Vec<f64> {
        self.pieces
            .iter()
            .flat_map(|p| p.windows(2).map(|w| 0.5 * (w[0] + w[1])))
            .collect()
    }

    /// `(t, value)` for every node, piece by piece; joins appear twice.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        let per_piece = self.pieces[0].len() - 1;
        let piece_len = self.measure() / self.pieces.len() as f64;
        let h = piece_len / per_piece as f64;
        let mut out = Vec::with_capacity(self.pieces.len() * (per_piece + 1));
        for (p, nodes) in self.pieces.iter().enumerate() {
            let origin = self.domain_start + p as f64 * piece_len;
            for (k, v) in nodes.iter().enumerate() {
                let t = if k == per_piece {
                    origin + piece_len
                } else {
                    origin + k as f64 * h
                };
                out.push((t, *v));
            }
        }
        out
    }

    pub fn max_value(&self) -> f64 {
        self.pieces.iter().flatten().fold(0.0, |m, v| m.max(*v))
    }

    pub fn min_value(&self) -> f64 {
        self.pieces.iter().flatten().fold(f64::INFINITY, |m, v| m.min(*v))
    }
}

/// Node states `y_k = e^{A t_k} b_i` of one actuator, plus exact evaluation
/// of `f_i` between nodes.
#[derive(Debug, Clone)]
pub struct ActuatorTrajectory {
    a: Matrix,
    grid: UniformGrid,
    states: Vec<Vec<f64>>,
    index: usize,
}

impl ActuatorTrajectory {
    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn node_values(&self) -> Vec<f64> {
        self.states.iter().map(|y| linalg::norm_sq(y)).collect()
    }

    pub fn profile(&self) -> SampledProfile {
        SampledProfile {
            domain_start: self.grid.start,
            domain_end: self.grid.end,
            pieces: vec![self.node_values()],
            actuator: Some(self.index),
        }
    }

    /// `f_i(t)` for any `t` in `[0, T]`, propagated from the nearest node below.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let h = self.grid.width();
        let k = ((t / h).floor().max(0.0) as usize).min(self.grid.cells);
        let dt = (t - self.grid.node(k)).max(0.0);
        if dt == 0.0 {
            return Ok(linalg::norm_sq(&self.states[k]));
        }
        let step = linalg::mat_exp(&self.a, dt)?;
        Ok(linalg::norm_sq(&step.mul_vec(&self.states[k])))
    }
}

pub fn trajectory(system: &LtiSystem, i: usize) -> Result<ActuatorTrajectory> {
    system.check_actuator(i)?;
    let b = system.b.column(i);
    if system.zero_columns == ZeroColumnPolicy::Reject && b.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroColumn { index: i + 1 });
    }
    let grid = system.grid();
    let states = linalg::propagate(&system.a, &b, &grid)?;
    Ok(ActuatorTrajectory {
        a: system.a.clone(),
        grid,
        states,
        index: i,
    })
}

/// `f_i` sampled on the `K + 1` nodes of `[0, T]`. `i` is 0-based.
pub fn profile(system: &LtiSystem, i: usize) -> Result<SampledProfile> {
    Ok(trajectory(system, i)?.profile())
}

pub fn trajectories(system: &LtiSystem) -> Result<Vec<ActuatorTrajectory>> {
    (0..system.actuators())
        .into_par_iter()
        .map(|i| trajectory(system, i))
        .collect()
}

/// `F` on `[0, mT]`: actuator `i`'s profile occupies `[(i-1)T, iT)`.
pub fn concat_profile(system: &LtiSystem) -> Result<SampledProfile> {
    let parts: Vec<SampledProfile> = trajectories(system)?.iter().map(|t| t.profile()).collect();
    SampledProfile::concat(&parts)
}

/// Closed interval `[start, end]` on which an actuator is switched on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn measure(&self) -> f64 {
        self.end - self.start
    }
}

/// Binary actuator schedule: `v_i = 1` on the listed intervals, 0 elsewhere.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schedule {
    actuators: Vec<Vec<Interval>>,
}

impl Schedule {
    pub fn empty(actuators: usize) -> Self {
        Self {
            actuators: vec![Vec::new(); actuators],
        }
    }

    /// Validates ordering, disjointness and finiteness of every interval list.
    pub fn new(actuators: Vec<Vec<Interval>>) -> Result<Self> {
        for (i, list) in actuators.iter().enumerate() {
            for iv in list {
                if !(iv.start.is_finite() && iv.end.is_finite()) || iv.start > iv.end {
                    return Err(Error::InvalidSchedule(format!(
                        "actuator {}: bad interval [{}, {}]",
                        i + 1,
                        iv.start,
                        iv.end
                    )));
                }
            }
            for w in list.windows(2) {
                if w[1].start <= w[0].end {
                    return Err(Error::InvalidSchedule(format!(
                        "actuator {}: intervals [{}, {}] and [{}, {}] overlap or are unsorted",
                        i + 1,
                        w[0].start,
                        w[0].end,
                        w[1].start,
                        w[1].end
                    )));
                }
            }
        }
        Ok(Self { actuators })
    }

    pub fn actuators(&self) -> usize {
        self.actuators.len()
    }

    pub fn intervals(&self, i: usize) -> &[Interval] {
        &self.actuators[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Interval]> {
        self.actuators.iter().map(Vec::as_slice)
    }

    pub fn measure_of(&self, i: usize) -> f64 {
        self.actuators[i].iter().map(Interval::measure).sum()
    }

    pub fn interval_count(&self, i: usize) -> usize {
        self.actuators[i].len()
    }

    /// Appends `iv` to actuator `i`, merging with the last interval when they
    /// touch. Intervals must arrive in increasing order.
    pub(crate) fn push(&mut self, i: usize, iv: Interval) {
        let list = &mut self.actuators[i];
        match list.last_mut() {
            Some(last) if iv.start <= last.end => last.end = last.end.max(iv.end),
            _ => list.push(iv),
        }
    }
}

/// Total switched-on time across all actuators.
pub fn budget(schedule: &Schedule) -> f64 {
    (0..schedule.actuators()).map(|i| schedule.measure_of(i)).sum()
}

/// Rejects schedules that exceed the budget or leave `[0, T]`.
pub fn check_feasible(system: &LtiSystem, schedule: &Schedule) -> Result<()> {
    check_shape(system, schedule)?;
    let used = budget(schedule);
    let slack = system.tie_tol * system.actuators() as f64 * system.horizon;
    if used > system.budget + slack {
        return Err(Error::InvalidSchedule(format!(
            "schedule uses {used}, budget is {}",
            system.budget
        )));
    }
    Ok(())
}

fn check_shape(system: &LtiSystem, schedule: &Schedule) -> Result<()> {
    if schedule.actuators() != system.actuators() {
        return Err(Error::DimensionMismatch(format!(
            "schedule has {} actuators, system has {}",
            schedule.actuators(),
            system.actuators()
        )));
    }
    let t = system.horizon;
    let slack = 1e-12 * t;
    for (i, list) in schedule.iter().enumerate() {
        for iv in list {
            if iv.start < -slack || iv.end > t + slack {
                return Err(Error::IntervalOutOfRange {
                    actuator: i + 1,
                    start: iv.start,
                    end: iv.end,
                    horizon: t,
                });
            }
        }
    }
    Ok(())
}

/// `Tr(W_V) = Σ_i ∫ v_i f_i dt` for a binary schedule.
pub fn trace_cost(system: &LtiSystem, schedule: &Schedule) -> Result<f64> {
    check_shape(system, schedule)?;
    let trajectories = trajectories(system)?;
    trace_cost_with(&trajectories, schedule)
}

/// Trapezoid rule over whole grid cells; partial cells at the interval ends
/// use exactly evaluated values.
pub(crate) fn trace_cost_with(trajectories: &[ActuatorTrajectory], schedule: &Schedule) -> Result<f64> {
    let mut total = 0.0;
    for (traj, list) in trajectories.iter().zip(schedule.iter()) {
        let values = traj.node_values();
        let grid = traj.grid;
        let h = grid.width();
        for iv in list {
            let s = iv.start.max(grid.start);
            let e = iv.end.min(grid.end);
            if e <= s {
                continue;
            }
            total += integrate_interval(traj, &values, s, e, h)?;
        }
    }
    Ok(total)
}

fn integrate_interval(traj: &ActuatorTrajectory, values: &[f64], s: f64, e: f64, h: f64) -> Result<f64> {
    let cells = traj.grid.cells;
    let snap = 1e-9 * h;
    // first node at or after s, last node at or before e
    let mut first = (s / h).ceil() as usize;
    if first > 0 && s - traj.grid.node(first - 1) <= snap {
        first -= 1;
    }
    let mut last = ((e / h).floor() as usize).min(cells);
    if last < cells && traj.grid.node(last + 1) - e <= snap {
        last += 1;
    }
    let at = |t: f64, k: Option<usize>| -> Result<f64> {
        match k {
            Some(k) => Ok(values[k]),
            None => traj.value_at(t),
        }
    };
    // partial cells by Simpson's rule
    let piece = |a: f64, fa: f64, b: f64, fb: f64| -> Result<f64> {
        Ok((b - a) * (fa + 4.0 * traj.value_at(0.5 * (a + b))? + fb) / 6.0)
    };
    if first > last || first > cells {
        return piece(s, traj.value_at(s)?, e, traj.value_at(e)?);
    }
    let t_first = traj.grid.node(first);
    let t_last = traj.grid.node(last);
    let mut acc = linalg::integrate_samples(&values[first..=last], h);
    if t_first > s {
        acc += piece(s, at(s, None)?, t_first, values[first])?;
    }
    if e > t_last {
        acc += piece(t_last, values[last], e, at(e, None)?)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example(gamma_sq: f64) -> LtiSystem {
        let g = gamma_sq.sqrt();
        let a = Matrix::diag(&[0.0, 0.0, 1.0]);
        let b = Matrix::from_rows(&[vec![g, 0.0, 1.0], vec![0.0, g, 1.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let opts = SystemOptions {
            zero_columns: ZeroColumnPolicy::Keep,
            ..Default::default()
        };
        LtiSystem::new(a, b, 2.0, 2.0, opts).unwrap()
    }

    #[test]
    fn constant_profile_for_zero_dynamics() {
        let sys = example(0.49);
        let p = profile(&sys, 0).unwrap();
        assert_eq!(p.values().len(), DEFAULT_CELLS + 1);
        assert!(p.values().iter().all(|v| (v - 0.49).abs() < 1e-15));
    }

    #[test]
    fn third_actuator_profile_matches_closed_form() {
        let sys = example(1.0);
        let p = profile(&sys, 2).unwrap();
        for (t, v) in p.samples() {
            let want = 2.0 + (2.0 * t).exp();
            assert!((v - want).abs() <= 1e-11 * want, "t={t}: {v} vs {want}");
        }
    }

    #[test]
    fn rotation_profile_is_constant() {
        let a = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
        let sys = LtiSystem::new(a, b, 3.0, 1.0, SystemOptions::default()).unwrap();
        let p = profile(&sys, 0).unwrap();
        assert!(p.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn zero_column_rejected_by_default() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let err = LtiSystem::new(a, b, 1.0, 1.0, SystemOptions::default()).unwrap_err();
        assert_eq!(err, Error::ZeroColumn { index: 2 });
    }

    #[test]
    fn zero_column_dropped_keeps_labels() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let opts = SystemOptions {
            zero_columns: ZeroColumnPolicy::Drop,
            ..Default::default()
        };
        let sys = LtiSystem::new(a, b, 1.0, 1.5, opts).unwrap();
        assert_eq!(sys.actuators(), 2);
        assert_eq!(sys.labels(), &[2, 3]);
    }

    #[test]
    fn budget_bounds_enforced() {
        let a = Matrix::zeros(1, 1);
        let b = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        for alpha in [0.0, -1.0, 4.0, 5.0, f64::NAN] {
            assert!(LtiSystem::new(a.clone(), b.clone(), 2.0, alpha, SystemOptions::default()).is_err());
        }
        assert!(LtiSystem::new(a, b, 2.0, 3.9, SystemOptions::default()).is_ok());
    }

    #[test]
    fn options_validated() {
        let a = Matrix::zeros(1, 1);
        let b = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let bad = [
            SystemOptions {
                cells: 8,
                ..Default::default()
            },
            SystemOptions {
                tie_tol: 0.0,
                ..Default::default()
            },
            SystemOptions {
                tie_tol: 0.5,
                ..Default::default()
            },
            SystemOptions {
                flat_tol: Some(-1.0),
                ..Default::default()
            },
        ];
        for opts in bad {
            assert!(
                LtiSystem::new(a.clone(), b.clone(), 1.0, 0.5, opts).is_err(),
                "{opts:?}"
            );
        }
    }

    #[test]
    fn concat_places_profiles_side_by_side() {
        let sys = example(1.0);
        let f = concat_profile(&sys).unwrap();
        assert_eq!(f.domain_end(), 6.0);
        assert_eq!(f.cell_count(), 3 * DEFAULT_CELLS);
        assert_eq!(f.cell_width(), 2.0 / DEFAULT_CELLS as f64);
        let cells = f.cell_values();
        assert!(cells[..2 * DEFAULT_CELLS].iter().all(|v| (v - 1.0).abs() < 1e-15));
        let k = DEFAULT_CELLS;
        assert!((cells[2 * k] - 3.0).abs() < 1e-2);
        assert!((cells[3 * k - 1] - (2.0 + 4f64.exp())).abs() < 0.1);

        let single = example(8.0).with_budget(1.0).unwrap();
        let one = SampledProfile::concat(&[profile(&single, 2).unwrap()]).unwrap();
        assert_eq!(one.cell_values(), profile(&single, 2).unwrap().cell_values());
    }

    #[test]
    fn empty_schedule_costs_nothing() {
        let sys = example(1.0);
        let s = Schedule::empty(3);
        assert_eq!(trace_cost(&sys, &s).unwrap(), 0.0);
        assert_eq!(budget(&s), 0.0);
    }

    #[test]
    fn trace_cost_gamma_zero_schedule() {
        let sys = example(0.0);
        let s = Schedule::new(vec![vec![], vec![], vec![Interval::new(0.0, 2.0)]]).unwrap();
        let want = 4.0 + (4f64.exp() - 1.0) / 2.0;
        let got = trace_cost(&sys, &s).unwrap();
        assert!((got - want).abs() / want < 1e-6, "{got} vs {want}");
        assert_eq!(budget(&s), 2.0);
    }

    #[test]
    fn trace_cost_off_grid_interval() {
        let sys = example(8.0);
        let t0 = 6f64.ln() / 2.0;
        let s = Schedule::new(vec![vec![Interval::new(0.0, t0)], vec![], vec![Interval::new(t0, 2.0)]]).unwrap();
        let want = 8.0 * t0 + 2.0 * (2.0 - t0) + (4f64.exp() - (2.0 * t0).exp()) / 2.0;
        let got = trace_cost(&sys, &s).unwrap();
        assert!((got - want).abs() / want < 1e-7, "{got} vs {want}");
    }

    #[test]
    fn trace_cost_tiny_interval_inside_one_cell() {
        let sys = example(1.0);
        let s = Schedule::new(vec![vec![], vec![], vec![Interval::new(1.0001, 1.0002)]]).unwrap();
        let want = ((2.0 * 1.0002f64).exp() - (2.0 * 1.0001f64).exp()) / 2.0 + 2.0 * 1e-4;
        let got = trace_cost(&sys, &s).unwrap();
        assert!((got - want).abs() / want < 1e-9);
    }

    #[test]
    fn out_of_range_interval_rejected() {
        let sys = example(1.0);
        let s = Schedule::new(vec![vec![Interval::new(1.0, 2.5)], vec![], vec![]]).unwrap();
        assert!(matches!(trace_cost(&sys, &s), Err(Error::IntervalOutOfRange { .. })));
    }

    #[test]
    fn schedule_validation() {
        assert!(Schedule::new(vec![vec![Interval::new(1.0, 0.5)]]).is_err());
        assert!(Schedule::new(vec![vec![Interval::new(0.0, 1.0), Interval::new(0.5, 2.0)]]).is_err());
        assert!(Schedule::new(vec![vec![Interval::new(0.0, 1.0), Interval::new(1.5, 2.0)]]).is_ok());
    }

    #[test]
    fn feasibility_check_flags_overspend() {
        let sys = example(1.0);
        let s = Schedule::new(vec![
            vec![Interval::new(0.0, 2.0)],
            vec![Interval::new(0.0, 1.0)],
            vec![],
        ])
        .unwrap();
        assert!(matches!(check_feasible(&sys, &s), Err(Error::InvalidSchedule(_))));
    }

    #[test]
    fn negative_profile_rejected() {
        let err = SampledProfile::new(0.0, 1.0, vec![1.0, -0.5, 2.0]).unwrap_err();
        assert_eq!(err, Error::NegativeValue { index: 1, value: -0.5 });
    }
}
