//! Problem files and option merging.

use std::path::Path;

use actsched::gramian::{LtiSystem, SystemOptions, ZeroColumnPolicy};
use actsched::Matrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemOptions {
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flat_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop_zero_columns: Option<bool>,
    /// Keep zero columns as actuators with `f_i ≡ 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keep_zero_columns: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub alpha: f64,
    #[serde(default)]
    pub options: ProblemOptions,
}

/// Command-line values that take precedence over the file's options.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub k: Option<usize>,
    pub tie_tol: Option<f64>,
    pub flat_tol: Option<f64>,
    pub drop_zero_columns: bool,
    pub keep_zero_columns: bool,
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn system(&self, overrides: &Overrides) -> Result<LtiSystem, CliError> {
        let opts = &self.options;
        let drop = overrides.drop_zero_columns || opts.drop_zero_columns.unwrap_or(false);
        let keep = overrides.keep_zero_columns || opts.keep_zero_columns.unwrap_or(false);
        let zero_columns = match (drop, keep) {
            (true, true) => {
                return Err(CliError::Input(
                    "drop_zero_columns and keep_zero_columns are exclusive".into(),
                ));
            }
            (true, false) => ZeroColumnPolicy::Drop,
            (false, true) => ZeroColumnPolicy::Keep,
            (false, false) => ZeroColumnPolicy::Reject,
        };
        let defaults = SystemOptions::default();
        let options = SystemOptions {
            cells: overrides.k.or(opts.k).unwrap_or(defaults.cells),
            tie_tol: overrides.tie_tol.or(opts.tie_tol).unwrap_or(defaults.tie_tol),
            flat_tol: overrides.flat_tol.or(opts.flat_tol),
            zero_columns,
        };
        let a = Matrix::from_rows(&self.a).map_err(CliError::Validation)?;
        let b = Matrix::from_rows(&self.b).map_err(CliError::Validation)?;
        LtiSystem::new(a, b, self.horizon, self.alpha, options).map_err(CliError::Validation)
    }
}
