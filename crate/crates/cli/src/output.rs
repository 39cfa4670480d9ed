//! Report, schedule and CSV writers.
//!
//! Every real is written as `{:.16e}`, i.e. 17 significant digits, which
//! round-trips an `f64` exactly.

use std::io::{self, Write};
use std::path::Path;

use actsched::gramian::{Interval, LtiSystem, SampledProfile, Schedule};
use actsched::rearrange::RearrangedProfile;
use actsched::scheduler::SolutionReport;
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::CliError;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON with fixed-width exponent notation for floats.
pub struct ExactFormatter(PrettyFormatter<'static>);

impl Default for ExactFormatter {
    fn default() -> Self {
        Self(PrettyFormatter::with_indent(b"  "))
    }
}

impl Formatter for ExactFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFormatter::default());
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Values keyed by 1-based actuator label, in label order.
#[derive(Debug, Clone, PartialEq)]
pub struct ByLabel<T>(pub Vec<(usize, T)>);

impl<T: Serialize> Serialize for ByLabel<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (label, v) in &self.0 {
            map.serialize_entry(&label.to_string(), v)?;
        }
        map.end()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatDofOut {
    pub level_sets: ByLabel<f64>,
    pub free_measure: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatIntervalOut {
    pub b_left: f64,
    pub b_right: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportOut {
    pub case: &'static str,
    pub threshold: f64,
    pub optimal_cost: f64,
    /// Quadrature of the canonical schedule; `schedule.json` reproduces it.
    pub schedule_cost: f64,
    pub unique: bool,
    pub flat_dof: Option<FlatDofOut>,
    pub flat_interval: Option<FlatIntervalOut>,
    pub alpha: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub actuators: Vec<usize>,
    #[serde(rename = "K")]
    pub cells: usize,
    pub tie_tol: f64,
    pub flat_tol: f64,
}

impl ReportOut {
    pub fn new(system: &LtiSystem, report: &SolutionReport) -> Self {
        let labels = system.labels();
        Self {
            case: report.case.as_str(),
            threshold: report.threshold,
            optimal_cost: report.optimal_cost,
            schedule_cost: report.canonical_cost,
            unique: report.unique,
            flat_dof: report.flat_dof.as_ref().map(|d| FlatDofOut {
                level_sets: ByLabel(labels.iter().copied().zip(d.level_sets.iter().copied()).collect()),
                free_measure: d.free_measure,
            }),
            flat_interval: report.flat_interval.map(|f| FlatIntervalOut {
                b_left: f.b_left,
                b_right: f.b_right,
                value: f.value,
            }),
            alpha: system.budget(),
            horizon: system.horizon(),
            actuators: labels.to_vec(),
            cells: system.cells(),
            tie_tol: system.tie_tol(),
            flat_tol: system.flat_tol(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScheduleOut {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub actuators: ByLabel<Vec<[f64; 2]>>,
}

impl ScheduleOut {
    pub fn new(system: &LtiSystem, schedule: &Schedule) -> Self {
        let actuators = system
            .labels()
            .iter()
            .zip(schedule.iter())
            .map(|(&label, ivs)| (label, ivs.iter().map(|iv| [iv.start, iv.end]).collect()))
            .collect();
        Self {
            horizon: system.horizon(),
            actuators: ByLabel(actuators),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct ScheduleIn {
    #[serde(rename = "T")]
    #[allow(dead_code)]
    horizon: Option<f64>,
    actuators: std::collections::BTreeMap<String, Vec<[f64; 2]>>,
}

/// Reads `schedule.json`, mapping labels back to the system's actuators.
pub fn read_schedule(path: &Path, system: &LtiSystem) -> Result<Schedule, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let parsed: ScheduleIn =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut lists = vec![Vec::new(); system.actuators()];
    for (key, ivs) in parsed.actuators {
        let label: usize = key
            .parse()
            .map_err(|_| CliError::Input(format!("actuator key {key:?} is not an index")))?;
        let slot = system
            .labels()
            .iter()
            .position(|&l| l == label)
            .ok_or_else(|| CliError::Input(format!("schedule names unknown actuator {label}")))?;
        lists[slot] = ivs.iter().map(|&[s, e]| Interval::new(s, e)).collect();
    }
    Schedule::new(lists).map_err(CliError::Validation)
}

pub fn write_profile_csv(path: &Path, profile: &SampledProfile) -> Result<(), CliError> {
    let rows = profile.samples();
    write_pairs(path, ["t", "F"], rows)
}

/// Two rows per step so plotted lines reproduce the staircase.
pub fn rearranged_rows(r: &RearrangedProfile) -> Vec<(f64, f64)> {
    r.steps().flat_map(|(s, e, v)| [(s, v), (e, v)]).collect()
}

pub fn write_pairs(path: &Path, header: [&str; 2], rows: Vec<(f64, f64)>) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    write_pairs_to(file, header, rows).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_pairs_to<W: Write>(out: W, header: [&str; 2], rows: Vec<(f64, f64)>) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for (x, y) in rows {
        w.write_record([fmt_f64(x), fmt_f64(y)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_solution(
    dir: &Path,
    system: &LtiSystem,
    report: &SolutionReport,
    profile: &SampledProfile,
    rearranged: &RearrangedProfile,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    write_file(&dir.join("report.json"), &to_json(&ReportOut::new(system, report))?)?;
    write_file(
        &dir.join("schedule.json"),
        &to_json(&ScheduleOut::new(system, &report.canonical))?,
    )?;
    write_profile_csv(&dir.join("profile.csv"), profile)?;
    write_pairs(&dir.join("rearranged.csv"), ["x", "Fstar"], rearranged_rows(rearranged))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        #[derive(Serialize)]
        struct V {
            x: f64,
        }
        let s = to_json(&V { x: 0.1 }).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
    }

    #[test]
    fn labels_serialize_in_order() {
        let s = to_json(&ByLabel(vec![(2, 1.0), (10, 2.0)])).unwrap();
        assert!(s.find("\"2\"").unwrap() < s.find("\"10\"").unwrap());
    }

    #[test]
    fn csv_pairs() {
        let mut buf = Vec::new();
        write_pairs_to(&mut buf, ["x", "Fstar"], vec![(0.0, 1.5)]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "x,Fstar\n0.0000000000000000e0,1.5000000000000000e0\n");
    }
}
