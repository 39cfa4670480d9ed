use std::path::Path;

use actsched::gramian::{self, LtiSystem, SampledProfile, SystemOptions};
use actsched::oracle;
use actsched::random::{random_profile, random_system_upto, rng};
use actsched::rearrange::{check_propositions, rearrange as rearrange_profile};
use actsched::scheduler;
use serde::Serialize;

use crate::output::{self, fmt_f64};
use crate::problem::{Overrides, ProblemFile};
use crate::CliError;

const COST_IDENTITY_TOL: f64 = 1e-6;
const ORACLE_TOL: f64 = 1e-4;
const L1_TOL: f64 = 1e-12;
const HARDY_LITTLEWOOD_TOL: f64 = 1e-9;

pub fn solve(input: &Path, out: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let system = ProblemFile::load(input)?.system(overrides)?;
    let profile = gramian::concat_profile(&system)?;
    let rearranged = rearrange_profile(&profile, system.tie_tol())?;
    let report = scheduler::solve(&system)?;
    output::write_solution(out, &system, &report, &profile, &rearranged)?;
    println!(
        "case={} unique={} threshold={} optimal_cost={}",
        report.case,
        report.unique,
        fmt_f64(report.threshold),
        fmt_f64(report.optimal_cost)
    );
    Ok(())
}

fn read_samples(input: &Path) -> Result<SampledProfile, CliError> {
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", input.display()));
    let mut reader = csv::Reader::from_path(input).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "f" {
        return Err(bad("expected header \"t,f\"".into()));
    }
    let mut ts = Vec::new();
    let mut fs = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("row {}: {e}", line + 1)))
        };
        ts.push(parse(&record[0])?);
        fs.push(parse(&record[1])?);
    }
    if ts.len() < 2 {
        return Err(bad("need at least two samples".into()));
    }
    let step = (ts[ts.len() - 1] - ts[0]) / (ts.len() - 1) as f64;
    if step.is_nan()
        || step <= 0.0
        || ts
            .windows(2)
            .any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step.max(1.0))
    {
        return Err(bad("samples must be uniformly spaced in increasing t".into()));
    }
    SampledProfile::new(ts[0], ts[ts.len() - 1], fs).map_err(CliError::Validation)
}

pub fn rearrange(input: &Path, out: Option<&Path>, tie_tol: Option<f64>) -> Result<(), CliError> {
    let profile = read_samples(input)?;
    let tie_tol = tie_tol.unwrap_or(SystemOptions::default().tie_tol);
    let r = rearrange_profile(&profile, tie_tol).map_err(CliError::Validation)?;
    let rows = output::rearranged_rows(&r);
    match out {
        Some(path) => output::write_pairs(path, ["x", "Fstar"], rows),
        None => output::write_pairs_to(std::io::stdout().lock(), ["x", "Fstar"], rows)
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

#[derive(Debug, Serialize)]
struct OracleOut {
    oracle_objective: f64,
    optimal_cost: f64,
    cost_residual: f64,
    symmetric_difference: f64,
    allowance: f64,
    sets_agree: bool,
}

pub fn oracle(input: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let system = ProblemFile::load(input)?.system(overrides)?;
    let report = scheduler::solve(&system)?;
    let cmp = oracle::compare(&system, &report)?;
    print!(
        "{}",
        output::to_json(&OracleOut {
            oracle_objective: cmp.oracle_objective,
            optimal_cost: report.optimal_cost,
            cost_residual: cmp.cost_residual,
            symmetric_difference: cmp.symmetric_difference,
            allowance: cmp.allowance,
            sets_agree: cmp.sets_agree(),
        })?
    );
    if !cmp.passes(ORACLE_TOL) {
        return Err(CliError::Check(format!(
            "oracle disagreement: residual {}, symmetric difference {} > allowance {}",
            fmt_f64(cmp.cost_residual),
            fmt_f64(cmp.symmetric_difference),
            fmt_f64(cmp.allowance)
        )));
    }
    Ok(())
}

/// Worst value seen for one check, against its tolerance.
struct Row {
    name: &'static str,
    worst: f64,
    tol: f64,
    count: usize,
}

#[derive(Default)]
struct Table(Vec<Row>);

impl Table {
    fn record(&mut self, name: &'static str, value: f64, tol: f64) {
        match self.0.iter_mut().find(|r| r.name == name) {
            Some(row) => {
                row.worst = row.worst.max(value);
                row.count += 1;
            }
            None => self.0.push(Row {
                name,
                worst: value,
                tol,
                count: 1,
            }),
        }
    }

    fn print(&self) {
        println!(
            "{:<28} {:>6} {:>12} {:>10}  status",
            "check", "runs", "worst", "tolerance"
        );
        for r in &self.0 {
            let status = if r.worst <= r.tol { "ok" } else { "FAIL" };
            println!(
                "{:<28} {:>6} {:>12.3e} {:>10.1e}  {status}",
                r.name, r.count, r.worst, r.tol
            );
        }
    }

    fn first_failure(&self) -> Option<&Row> {
        self.0.iter().find(|r| r.worst.is_nan() || r.worst > r.tol)
    }
}

fn check_pair(table: &mut Table, f: &SampledProfile, g: &SampledProfile, tie_tol: f64) -> Result<(), CliError> {
    let rep = check_propositions(f, g, tie_tol)?;
    let scale = (f.max_value() * g.max_value() * f.measure()).max(1.0);
    table.record("L1 conservation", rep.l1_relative, L1_TOL);
    table.record("level-set measure", rep.level_set_residual, 0.0);
    table.record(
        "Hardy-Littlewood gap",
        rep.hardy_littlewood_gap / scale,
        HARDY_LITTLEWOOD_TOL,
    );
    table.record("monotonicity violations", rep.monotonicity_violations as f64, 0.0);
    table.record("bounded-by-one violations", rep.bounded_violations as f64, 0.0);
    Ok(())
}

fn check_system(table: &mut Table, system: &LtiSystem) -> Result<(), CliError> {
    let report = scheduler::solve(system)?;
    let used = gramian::budget(&report.canonical);
    table.record(
        "budget miss / flat_tol",
        (used - system.budget()).abs() / system.flat_tol(),
        1.0,
    );
    let identity =
        (report.canonical_cost - report.optimal_cost).abs() / report.optimal_cost.abs().max(f64::MIN_POSITIVE);
    table.record("cost identity", identity, COST_IDENTITY_TOL);
    let unique_ok = report.unique == (report.case != scheduler::Case::Flat);
    table.record("uniqueness flag mismatch", if unique_ok { 0.0 } else { 1.0 }, 0.0);

    let cmp = oracle::compare(system, &report)?;
    table.record("oracle residual", cmp.cost_residual, ORACLE_TOL);
    table.record(
        "oracle cell sets / allowance",
        cmp.symmetric_difference / cmp.allowance,
        1.0,
    );

    let profiles: Vec<SampledProfile> = (0..system.actuators())
        .map(|i| gramian::profile(system, i))
        .collect::<Result<_, _>>()?;
    for (i, f) in profiles.iter().enumerate() {
        let g = &profiles[(i + 1) % profiles.len()];
        check_pair(table, f, g, system.tie_tol())?;
    }
    Ok(())
}

fn verify_schedule(system: &LtiSystem, path: &Path) -> Result<(), CliError> {
    let schedule = output::read_schedule(path, system)?;
    gramian::check_feasible(system, &schedule).map_err(|e| CliError::Check(format!("feasibility violation: {e}")))?;
    let cost = gramian::trace_cost(system, &schedule)?;
    println!(
        "budget={} alpha={} trace_cost={}",
        fmt_f64(gramian::budget(&schedule)),
        fmt_f64(system.budget()),
        fmt_f64(cost)
    );
    Ok(())
}

pub fn verify(
    input: Option<&Path>,
    schedule: Option<&Path>,
    seed: u64,
    trials: usize,
    overrides: &Overrides,
) -> Result<(), CliError> {
    let mut table = Table::default();
    match input {
        Some(path) => {
            let system = ProblemFile::load(path)?.system(overrides)?;
            if let Some(s) = schedule {
                return verify_schedule(&system, s);
            }
            check_system(&mut table, &system)?;
        }
        None => {
            let defaults = SystemOptions::default();
            let options = SystemOptions {
                cells: overrides.k.unwrap_or(defaults.cells),
                tie_tol: overrides.tie_tol.unwrap_or(defaults.tie_tol),
                flat_tol: overrides.flat_tol,
                ..defaults
            };
            let mut r = rng(seed);
            for _ in 0..trials {
                let system = random_system_upto(&mut r, 6, 4, options)?;
                check_system(&mut table, &system)?;
            }
            for t in 0..trials {
                let measure = 1.0 + 0.5 * (t % 5) as f64;
                let f = random_profile(&mut r, 256, measure);
                let g = random_profile(&mut r, 256, measure);
                check_pair(&mut table, &f, &g, options.tie_tol)?;
            }
        }
    }
    table.print();
    match table.first_failure() {
        Some(row) => Err(CliError::Check(format!(
            "{}: worst {} exceeds {}",
            row.name,
            fmt_f64(row.worst),
            fmt_f64(row.tol)
        ))),
        None => Ok(()),
    }
}
