//! Non-increasing rearrangement of a sampled profile.
//!
//! The rearrangement is taken of the piecewise-constant cell surrogate (each
//! cell carries the mean of its two nodes), so level-set measures and the L¹
//! mass are preserved exactly: sorting only permutes cells. Cells whose values
//! agree within `tie_tol` (relative) are merged into one step.

use crate::error::{Error, Result};
use crate::gramian::SampledProfile;

/// `f*` as a strictly decreasing step function on `[0, source_measure]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RearrangedProfile {
    source_measure: f64,
    cell_width: f64,
    tie_tol: f64,
    values: Vec<f64>,
    // cumulative cell counts, starting at 0; measures are counts × cell_width
    cum_counts: Vec<usize>,
    cum_integral: Vec<f64>,
}

/// Largest open interval around a point on which `f*` is constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatInterval {
    pub b_left: f64,
    pub b_right: f64,
    pub value: f64,
}

/// Local monotonicity of `f*` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalShape {
    StrictBoth,
    /// Strictly decreasing on the right, flat on the left.
    StrictRight,
    /// Strictly decreasing from the left, flat on the right.
    StrictLeft,
    Flat(FlatInterval),
}

pub(crate) fn is_tie(a: f64, b: f64, tie_tol: f64) -> bool {
    (a - b).abs() <= tie_tol * a.abs().max(b.abs())
}

pub fn rearrange(profile: &SampledProfile, tie_tol: f64) -> Result<RearrangedProfile> {
    let mut cells = profile.cell_values();
    if let Some((index, &value)) = cells.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::NegativeValue { index, value });
    }
    cells.sort_unstable_by(|a, b| b.total_cmp(a));

    let w = profile.cell_width();
    let mut values = Vec::new();
    let mut cum_counts = vec![0];
    let mut cum_integral = vec![0.0];
    let mut i = 0;
    while i < cells.len() {
        let head = cells[i];
        let mut j = i + 1;
        let mut sum = head;
        while j < cells.len() && head - cells[j] <= tie_tol * head {
            sum += cells[j];
            j += 1;
        }
        let count = j - i;
        values.push(sum / count as f64);
        cum_counts.push(j);
        cum_integral.push(cum_integral.last().copied().unwrap_or(0.0) + sum * w);
        i = j;
    }

    Ok(RearrangedProfile {
        source_measure: profile.measure(),
        cell_width: w,
        tie_tol,
        values,
        cum_counts,
        cum_integral,
    })
}

impl RearrangedProfile {
    pub fn source_measure(&self) -> f64 {
        self.source_measure
    }

    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }

    pub fn tie_tol(&self) -> f64 {
        self.tie_tol
    }

    /// Step values, strictly decreasing.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn measure(&self, j: usize) -> f64 {
        (self.cum_counts[j + 1] - self.cum_counts[j]) as f64 * self.cell_width
    }

    /// Left end of step `j`; `cum_measure(len())` is the total measure.
    pub fn cum_measure(&self, j: usize) -> f64 {
        self.cum_counts[j] as f64 * self.cell_width
    }

    pub(crate) fn cum_count(&self, j: usize) -> usize {
        self.cum_counts[j]
    }

    /// `∫_0^{cum_measure(j)} f*`.
    pub fn cum_integral_at_step(&self, j: usize) -> f64 {
        self.cum_integral[j]
    }

    /// `(start, end, value)` for every step.
    pub fn steps(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.len()).map(|j| (self.cum_measure(j), self.cum_measure(j + 1), self.values[j]))
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let slack = 1e-12 * self.source_measure;
        if !(x >= -slack && x <= self.source_measure + slack) {
            return Err(Error::OutOfDomain {
                x,
                measure: self.source_measure,
            });
        }
        Ok(())
    }

    // step containing x, boundaries belonging to the left step
    fn step_index(&self, x: f64) -> usize {
        let w = self.cell_width;
        let j = self.cum_counts[1..].partition_point(|&c| (c as f64 * w) < x);
        j.min(self.len() - 1)
    }

    /// `f*(x)`. At a step boundary the left step's value is returned, i.e.
    /// `f*(x) = sup{t : μ{f > t} ≥ x}`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.values[self.step_index(x)])
    }

    /// `μ{f > θ}`, treating values within `tie_tol` of `θ` as equal to it.
    pub fn level_measure_gt(&self, theta: f64) -> f64 {
        let j = self
            .values
            .partition_point(|&v| v > theta && !is_tie(v, theta, self.tie_tol));
        self.cum_measure(j)
    }

    /// `μ{f ≥ θ}`, treating values within `tie_tol` of `θ` as equal to it.
    pub fn level_measure_ge(&self, theta: f64) -> f64 {
        let j = self
            .values
            .partition_point(|&v| v > theta || is_tie(v, theta, self.tie_tol));
        self.cum_measure(j)
    }

    /// `μ{f* > θ}` with exact comparisons.
    pub(crate) fn measure_above(&self, theta: f64) -> f64 {
        self.cum_measure(self.values.partition_point(|&v| v > theta))
    }

    /// `∫_0^x f*(s) ds`.
    pub fn cum_integral(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        let x = x.clamp(0.0, self.source_measure);
        let j = self.step_index(x);
        let start = self.cum_measure(j);
        Ok(self.cum_integral[j] + (x - start).max(0.0) * self.values[j])
    }

    /// Classifies `f*` at an interior point `x`. With `θ = f*(x)`,
    /// `l = μ{f > θ}` and `u = μ{f ≥ θ}`, `f*` is strictly decreasing on the
    /// right iff `u = x` and from the left iff `l = x`, each up to `flat_tol`.
    pub fn flat_interval_at(&self, x: f64, flat_tol: f64) -> Result<LocalShape> {
        if !(x > 0.0 && x < self.source_measure) {
            return Err(Error::OutOfDomain {
                x,
                measure: self.source_measure,
            });
        }
        let theta = self.eval(x)?;
        let l = self.level_measure_gt(theta);
        let u = self.level_measure_ge(theta);
        Ok(if u - l <= flat_tol {
            LocalShape::StrictBoth
        } else if (u - x).abs() <= flat_tol && l < x {
            LocalShape::StrictRight
        } else if (l - x).abs() <= flat_tol && x < u {
            LocalShape::StrictLeft
        } else {
            LocalShape::Flat(FlatInterval {
                b_left: l,
                b_right: u,
                value: theta,
            })
        })
    }
}

/// Residuals of the rearrangement identities for a pair of profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct PropositionReport {
    /// `|∫f − ∫f*| / ∫f`, worst of `f` and `g`.
    pub l1_relative: f64,
    /// Largest `|μ{f > θ} − μ{f* > θ}|` over the θ sweep, both profiles.
    pub level_set_residual: f64,
    /// `∫fg − ∫f*g*`; never positive up to rounding.
    pub hardy_littlewood_gap: f64,
    /// Whether `f ≤ g` held cellwise, making the monotonicity check apply.
    pub monotone_applicable: bool,
    pub monotonicity_violations: usize,
    /// Steps of `f*` or `g*` above one when the source is bounded by one.
    pub bounded_violations: usize,
}

impl PropositionReport {
    pub fn passes(&self, l1_tol: f64, hl_tol: f64) -> bool {
        self.l1_relative <= l1_tol
            && self.level_set_residual == 0.0
            && self.hardy_littlewood_gap <= hl_tol
            && self.monotonicity_violations == 0
            && self.bounded_violations == 0
    }
}

/// `∫ f* g*` by walking the merged breakpoints of both step functions.
pub fn integrate_product(f: &RearrangedProfile, g: &RearrangedProfile) -> f64 {
    let mut acc = 0.0;
    let (mut i, mut j) = (0, 0);
    let mut pos = 0usize;
    while i < f.len() && j < g.len() {
        let next = f.cum_count(i + 1).min(g.cum_count(j + 1));
        acc += (next - pos) as f64 * f.values[i] * g.values[j];
        pos = next;
        if f.cum_count(i + 1) == next {
            i += 1;
        }
        if g.cum_count(j + 1) == next {
            j += 1;
        }
    }
    acc * f.cell_width
}

fn same_domain(f: &SampledProfile, g: &SampledProfile) -> bool {
    f.cell_count() == g.cell_count()
        && (f.domain_start() - g.domain_start()).abs() <= 1e-12 * f.measure()
        && (f.domain_end() - g.domain_end()).abs() <= 1e-12 * f.measure()
}

fn level_residual(cells: &[f64], r: &RearrangedProfile, w: f64, tie_tol: f64) -> f64 {
    let mut sorted = cells.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut distinct = sorted.clone();
    distinct.dedup();
    let mut worst: f64 = 0.0;
    for pair in distinct.windows(2) {
        let theta = 0.5 * (pair[0] + pair[1]);
        // the nearest cell values to theta are its two neighbours
        if is_tie(pair[0], theta, tie_tol) || is_tie(pair[1], theta, tie_tol) {
            continue;
        }
        let source = sorted.partition_point(|&v| v > theta) as f64 * w;
        worst = worst.max((source - r.measure_above(theta)).abs());
    }
    worst
}

/// Checks conservation of mass, equimeasurability, Hardy–Littlewood,
/// monotonicity and the bounded-by-one property on one profile pair.
pub fn check_propositions(f: &SampledProfile, g: &SampledProfile, tie_tol: f64) -> Result<PropositionReport> {
    if !same_domain(f, g) {
        return Err(Error::DomainMismatch);
    }
    let fr = rearrange(f, tie_tol)?;
    let gr = rearrange(g, tie_tol)?;
    let fc = f.cell_values();
    let gc = g.cell_values();
    let w = f.cell_width();

    let l1 = |cells: &[f64], r: &RearrangedProfile| {
        let direct: f64 = cells.iter().sum::<f64>() * w;
        let sorted = r.cum_integral_at_step(r.len());
        if direct == 0.0 {
            sorted.abs()
        } else {
            (direct - sorted).abs() / direct
        }
    };
    let l1_relative = l1(&fc, &fr).max(l1(&gc, &gr));

    let level_set_residual = level_residual(&fc, &fr, w, tie_tol).max(level_residual(&gc, &gr, w, tie_tol));

    let direct: f64 = fc.iter().zip(&gc).map(|(a, b)| a * b).sum::<f64>() * w;
    let hardy_littlewood_gap = direct - integrate_product(&fr, &gr);

    let monotone_applicable = fc.iter().zip(&gc).all(|(a, b)| a <= b);
    let monotonicity_violations = if monotone_applicable {
        count_exceedances(&fr, &gr)
    } else {
        0
    };

    let mut bounded_violations = 0;
    for (cells, r) in [(&fc, &fr), (&gc, &gr)] {
        if cells.iter().all(|&v| v <= 1.0) {
            bounded_violations += r.values().iter().filter(|&&v| v > 1.0).count();
        }
    }

    Ok(PropositionReport {
        l1_relative,
        level_set_residual,
        hardy_littlewood_gap,
        monotone_applicable,
        monotonicity_violations,
        bounded_violations,
    })
}

// segments of the common refinement where f* > g* beyond the merge tolerance
fn count_exceedances(f: &RearrangedProfile, g: &RearrangedProfile) -> usize {
    let mut count = 0;
    let (mut i, mut j) = (0, 0);
    while i < f.len() && j < g.len() {
        let (a, b) = (f.values[i], g.values[j]);
        if a > b && !is_tie(a, b, f.tie_tol.max(g.tie_tol)) {
            count += 1;
        }
        let next = f.cum_count(i + 1).min(g.cum_count(j + 1));
        if f.cum_count(i + 1) == next {
            i += 1;
        }
        if g.cum_count(j + 1) == next {
            j += 1;
        }
    }
    count
}
