//! Optimal schedules from the rearranged concatenated profile.
//!
//! `F*` is classified at `α`. If it is strictly decreasing there, the optimum
//! is unique and is a threshold set of the profiles: `{f_i ≥ θ}` when the drop
//! is on the right, `{f_i > θ}` when it is on the left. If `F*` is flat around
//! `α`, every optimum is `{f_i > θ}` plus any part of the level set `{f_i = θ}`
//! that brings the total up to `α`; one left-filled representative is built
//! and the size of the family is reported.

use crate::error::{Error, Result};
use crate::gramian::{self, ActuatorTrajectory, Interval, LtiSystem, SampledProfile, Schedule};
use crate::rearrange::{self, is_tie, FlatInterval, LocalShape};

/// Switching times are refined to this fraction of the horizon.
const SWITCH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    StrictRight,
    StrictLeft,
    StrictBoth,
    Flat,
}

impl Case {
    pub fn as_str(&self) -> &'static str {
        match self {
            Case::StrictRight => "strict_right",
            Case::StrictLeft => "strict_left",
            Case::StrictBoth => "strict_both",
            Case::Flat => "flat",
        }
    }

    pub fn is_strict(&self) -> bool {
        *self != Case::Flat
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub case: Case,
    /// `F*(α)` of the cell surrogate.
    pub threshold: f64,
    pub flat_interval: Option<FlatInterval>,
}

impl Classification {
    fn from_shape(shape: LocalShape, threshold: f64) -> Self {
        let (case, flat_interval) = match shape {
            LocalShape::StrictBoth => (Case::StrictBoth, None),
            LocalShape::StrictRight => (Case::StrictRight, None),
            LocalShape::StrictLeft => (Case::StrictLeft, None),
            LocalShape::Flat(fi) => (Case::Flat, Some(fi)),
        };
        Self {
            case,
            threshold,
            flat_interval,
        }
    }
}

/// Degrees of freedom of the optimal family in the flat case.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatDof {
    /// `μ{t : f_i(t) = θ}` per actuator.
    pub level_sets: Vec<f64>,
    /// Measure to distribute over the level sets: `α − μ{F > θ}`.
    pub free_measure: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionReport {
    pub case: Case,
    /// `F*(α)`; in the strict cases refined against the continuous level sets.
    pub threshold: f64,
    /// `∫_0^α F*`.
    pub optimal_cost: f64,
    pub unique: bool,
    pub canonical: Schedule,
    /// `Tr(W_V)` of `canonical` by direct quadrature.
    pub canonical_cost: f64,
    pub flat_dof: Option<FlatDof>,
    pub flat_interval: Option<FlatInterval>,
}

/// True when the node values vary by at most `tie_tol` relative to the max.
pub fn is_constant_profile(profile: &SampledProfile, tie_tol: f64) -> bool {
    let max = profile.max_value();
    max - profile.min_value() <= tie_tol * max
}

struct Workspace<'a> {
    system: &'a LtiSystem,
    trajectories: Vec<ActuatorTrajectory>,
    values: Vec<Vec<f64>>,
    constants: Vec<Option<f64>>,
}

impl<'a> Workspace<'a> {
    fn new(system: &'a LtiSystem) -> Result<Self> {
        let trajectories = gramian::trajectories(system)?;
        let values: Vec<Vec<f64>> = trajectories.iter().map(ActuatorTrajectory::node_values).collect();
        let constants = trajectories
            .iter()
            .zip(&values)
            .map(|(traj, v)| {
                is_constant_profile(&traj.profile(), system.tie_tol()).then(|| v.iter().sum::<f64>() / v.len() as f64)
            })
            .collect();
        Ok(Self {
            system,
            trajectories,
            values,
            constants,
        })
    }

    fn concat(&self) -> Result<SampledProfile> {
        let parts: Vec<SampledProfile> = self.trajectories.iter().map(ActuatorTrajectory::profile).collect();
        SampledProfile::concat(&parts)
    }

    /// `{t : f_i(t) ≥ θ}` (or `> θ`) as closed intervals.
    fn level_set(&self, i: usize, theta: f64, strict: bool) -> Result<Vec<Interval>> {
        let horizon = self.system.horizon();
        let tie_tol = self.system.tie_tol();
        if let Some(c) = self.constants[i] {
            let on = if is_tie(c, theta, tie_tol) { !strict } else { c > theta };
            return Ok(if on {
                vec![Interval::new(0.0, horizon)]
            } else {
                Vec::new()
            });
        }

        let above = |v: f64| if strict { v > theta } else { v >= theta };
        let traj = &self.trajectories[i];
        let grid = traj.grid();
        let values = &self.values[i];
        let mut out = Vec::new();
        let mut open = above(values[0]).then_some(0.0);
        for k in 1..values.len() {
            let was = above(values[k - 1]);
            if was == above(values[k]) {
                continue;
            }
            let t = refine_crossing(traj, grid.node(k - 1), grid.node(k), was, &above, SWITCH_TOL * horizon)?;
            match open.take() {
                Some(start) => out.push(Interval::new(start, t)),
                None => open = Some(t),
            }
        }
        if let Some(start) = open {
            out.push(Interval::new(start, horizon));
        }
        Ok(out)
    }

    fn threshold_schedule(&self, theta: f64, strict: bool) -> Result<Schedule> {
        let mut schedule = Schedule::empty(self.system.actuators());
        for i in 0..self.system.actuators() {
            for iv in self.level_set(i, theta, strict)? {
                schedule.push(i, iv);
            }
        }
        Ok(schedule)
    }

    fn level_measure(&self, theta: f64) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..self.system.actuators() {
            total += self
                .level_set(i, theta, false)?
                .iter()
                .map(Interval::measure)
                .sum::<f64>();
        }
        Ok(total)
    }

    fn level_set_measures(&self, theta: f64) -> Vec<f64> {
        let tie_tol = self.system.tie_tol();
        self.constants
            .iter()
            .map(|c| match c {
                Some(c) if is_tie(*c, theta, tie_tol) => self.system.horizon(),
                _ => 0.0,
            })
            .collect()
    }

    fn fill_flat(&self, theta: f64, free_measure: f64) -> Result<Schedule> {
        let mut schedule = self.threshold_schedule(theta, true)?;
        let available = self.level_set_measures(theta);
        let mut remaining = free_measure.max(0.0);
        for (i, &avail) in available.iter().enumerate() {
            if remaining <= 0.0 {
                break;
            }
            if avail > 0.0 {
                // strict part of a level-set actuator is empty, so [0, take] is free
                let take = remaining.min(avail);
                schedule.push(i, Interval::new(0.0, take));
                remaining -= take;
            }
        }
        if remaining > self.system.flat_tol() {
            return Err(Error::InsufficientLevelSet {
                threshold: theta,
                available: available.iter().sum(),
                required: free_measure,
            });
        }
        Ok(schedule)
    }

    /// Brackets `θ* = sup{θ : Σ_i μ{f_i ≥ θ} ≥ α}` to relative precision
    /// ~1e-15, starting from the grid estimate. Returns `(lo, hi)` with
    /// `M(lo) ≥ α > M(hi)`.
    fn refine_threshold(&self, guess: f64) -> Result<(f64, f64)> {
        let alpha = self.system.budget();
        let scale = guess.abs().max(f64::MIN_POSITIVE);

        let mut lo = guess;
        let mut step = 1e-6 * scale;
        while lo > 0.0 && self.level_measure(lo)? < alpha {
            lo = (lo - step).max(0.0);
            step *= 2.0;
        }
        let mut hi = guess;
        let mut step = 1e-6 * scale;
        while self.level_measure(hi)? >= alpha {
            hi += step;
            step *= 2.0;
        }
        for _ in 0..200 {
            if hi - lo <= 1e-15 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.level_measure(mid)? >= alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo, hi))
    }
}

fn refine_crossing(
    traj: &ActuatorTrajectory,
    mut lo: f64,
    mut hi: f64,
    lo_above: bool,
    above: &impl Fn(f64) -> bool,
    tol: f64,
) -> Result<f64> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if above(traj.value_at(mid)?) == lo_above {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Classifies `F*` at `α` and returns the grid value `F*(α)`.
pub fn classify(system: &LtiSystem) -> Result<Classification> {
    let ws = Workspace::new(system)?;
    classify_with(&ws).map(|(c, _)| c)
}

fn classify_with(ws: &Workspace) -> Result<(Classification, rearrange::RearrangedProfile)> {
    let system = ws.system;
    let r = rearrange::rearrange(&ws.concat()?, system.tie_tol())?;
    let shape = r.flat_interval_at(system.budget(), system.flat_tol())?;
    let theta = r.eval(system.budget())?;
    Ok((Classification::from_shape(shape, theta), r))
}

/// `v_i = 1{f_i ≥ θ}`, or `1{f_i > θ}` when `strict`.
pub fn threshold_schedule(system: &LtiSystem, theta: f64, strict: bool) -> Result<Schedule> {
    Workspace::new(system)?.threshold_schedule(theta, strict)
}

/// `1{f_i > θ}` plus left-most pieces of the level sets `{f_i = θ}`,
/// lowest actuator first, totalling `free_measure`.
pub fn fill_flat(system: &LtiSystem, theta: f64, free_measure: f64) -> Result<Schedule> {
    Workspace::new(system)?.fill_flat(theta, free_measure)
}

pub fn solve(system: &LtiSystem) -> Result<SolutionReport> {
    let ws = Workspace::new(system)?;
    let (class, r) = classify_with(&ws)?;
    let alpha = system.budget();
    let optimal_cost = r.cum_integral(alpha)?;

    let (threshold, canonical, flat_dof) = match class.case {
        Case::Flat => {
            let theta = class.threshold;
            let strict = ws.threshold_schedule(theta, true)?;
            let free_measure = (alpha - gramian::budget(&strict)).max(0.0);
            let canonical = ws.fill_flat(theta, free_measure)?;
            let dof = FlatDof {
                level_sets: ws.level_set_measures(theta),
                free_measure,
            };
            (theta, canonical, Some(dof))
        }
        case => {
            let (lo, hi) = ws.refine_threshold(class.threshold)?;
            let right = || ws.threshold_schedule(lo, false);
            let left = || ws.threshold_schedule(hi, true);
            let (first, second) = if case == Case::StrictLeft {
                (left()?, right()?)
            } else {
                (right()?, left()?)
            };
            // A level set sitting exactly at θ* (a constant profile) makes the
            // two formulas differ by more than measure zero; keep the feasible one.
            let miss = |s: &Schedule| (gramian::budget(s) - alpha).abs();
            let canonical = if miss(&first) > system.flat_tol() && miss(&second) < miss(&first) {
                second
            } else {
                first
            };
            (0.5 * (lo + hi), canonical, None)
        }
    };

    let canonical_cost = gramian::trace_cost_with(&ws.trajectories, &canonical)?;
    Ok(SolutionReport {
        case: class.case,
        threshold,
        optimal_cost,
        unique: class.case.is_strict(),
        canonical,
        canonical_cost,
        flat_dof,
        flat_interval: class.flat_interval,
    })
}
