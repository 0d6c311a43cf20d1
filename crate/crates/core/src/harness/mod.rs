//! Reproducible experiments driven by JSON configs.
//!
//! Every experiment returns an [`Outcome`]: the JSON result, any CSV traces,
//! and the exit status the CLI should report. Outputs contain no timings or
//! host details, so identical configs give byte-identical files.

mod config;
mod experiments;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use config::{
    ComponentSpec, Experiment, ExperimentConfig, LlnSettings, RecoverSettings, ResolvedConfig, Tolerances, VerifySettings,
    ZeroOneSettings,
};
pub use experiments::{run, run_check_conditions, run_lln, run_recover, run_verify, run_zero_one};

use crate::error::Result;

/// Version string echoed into every result.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Pass,
    Error,
    Unknown,
    CriteriaFailed,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Pass => 0,
            ExitStatus::Error => 1,
            ExitStatus::Unknown => 2,
            ExitStatus::CriteriaFailed => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub value: f64,
    /// Threshold compared against `value` with `comparison`.
    pub bound: f64,
    pub comparison: String,
    pub passed: bool,
}

impl Criterion {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Criterion {
            name: name.to_string(),
            value,
            bound,
            comparison: "<=".to_string(),
            passed: value <= bound,
        }
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Criterion {
            name: name.to_string(),
            value,
            bound,
            comparison: ">=".to_string(),
            passed: value >= bound,
        }
    }

    /// A yes/no criterion reported as 1 or 0.
    pub fn holds(name: &str, ok: bool) -> Self {
        Criterion {
            name: name.to_string(),
            value: if ok { 1.0 } else { 0.0 },
            bound: 1.0,
            comparison: "==".to_string(),
            passed: ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub version: String,
    pub config_hash: String,
    /// The resolved config, defaults included.
    pub config: ExperimentConfig,
    pub records: Vec<serde_json::Value>,
    pub aggregate: BTreeMap<String, serde_json::Value>,
    pub criteria: Vec<Criterion>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub result: ExperimentResult,
    /// Extra files for `--out`, beyond `result.json`.
    pub files: Vec<OutputFile>,
    pub status: ExitStatus,
    /// What the CLI prints on stdout.
    pub stdout: String,
}

impl Outcome {
    /// Writes `result.json` and the extra files into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("result.json"), to_pretty_json(&self.result)?)?;
        for f in &self.files {
            std::fs::write(dir.join(&f.name), &f.contents)?;
        }
        Ok(())
    }
}

pub(crate) fn to_pretty_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Sample mean and standard deviation (n - 1 denominator; zero for one value).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_sd_basics() {
        assert_eq!(mean_sd(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn criteria_compare() {
        assert!(Criterion::at_most("a", 0.01, 0.02).passed);
        assert!(!Criterion::at_least("b", 0.8, 0.9).passed);
        assert!(!Criterion::holds("c", false).passed);
    }
}
