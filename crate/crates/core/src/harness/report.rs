//! Machine-readable verification reports.

use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use crate::{Error, Result};

/// Location of the worst sample of a check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstPoint {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
}

/// Which side of the tolerance a check must stay on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bound {
    /// Largest value must be `≤ tolerance`.
    AtMost,
    /// Smallest value must be `≥ tolerance`.
    AtLeast,
    /// Smallest value must be `> tolerance`.
    Above,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// No sample produced a value for this check.
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub bound: Bound,
    /// Worst value over all samples (max for upper bounds, min for lower).
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub status: CheckStatus,
    /// Diagnostics are reported but never affect the overall verdict.
    pub diagnostic: bool,
    /// Number of samples that contributed a value.
    pub samples: usize,
    pub worst: Option<WorstPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckRecord {
    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }

    /// `true` when the record counts against the verdict.
    pub fn is_failure(&self) -> bool {
        !self.diagnostic && self.status == CheckStatus::Fail
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scenario: Scenario,
    pub seed: u64,
    pub samples: usize,
    pub notes: Vec<String>,
    pub checks: Vec<CheckRecord>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| c.is_failure())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// One line per check, for terminal output.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "scenario {} (seed {}, {} samples)\n",
            self.scenario.name, self.seed, self.samples
        );
        for c in &self.checks {
            let status = match (c.status, c.diagnostic) {
                (CheckStatus::NotApplicable, _) => "n/a ",
                (_, true) => "diag",
                (CheckStatus::Pass, false) => "PASS",
                (CheckStatus::Fail, false) => "FAIL",
            };
            let value = c.residual.map_or("-".to_string(), |v| format!("{v:.3e}"));
            let tol = c.tolerance.map_or(String::new(), |t| {
                let op = match c.bound {
                    Bound::AtMost => "<=",
                    Bound::AtLeast => ">=",
                    Bound::Above => ">",
                };
                format!(" (need {op} {t:.1e})")
            });
            out.push_str(&format!("  {status}  {:<40} {value}{tol}\n", c.name));
        }
        for n in &self.notes {
            out.push_str(&format!("  note: {n}\n"));
        }
        out.push_str(if self.passed { "overall: PASS\n" } else { "overall: FAIL\n" });
        out
    }
}
