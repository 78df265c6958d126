//! One-parameter sweeps producing plot-ready tables.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::report::VerificationReport;
use super::run::run_scenario;
use super::scenario::Scenario;
use crate::coefficients::{positivity_check, Branch, CoefficientSource};
use crate::{Error, Result};

/// Number of `t` steps used to locate the admissible window.
const WINDOW_STEPS: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParameter {
    C,
    Rho,
    TMax,
    Branch,
}

impl FromStr for SweepParameter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c" => Ok(Self::C),
            "rho" => Ok(Self::Rho),
            "t-max" | "t_max" => Ok(Self::TMax),
            "branch" => Ok(Self::Branch),
            other => Err(Error::Config(format!(
                "cannot sweep `{other}` (expected c, rho, t-max or branch)"
            ))),
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::C => "c",
            Self::Rho => "rho",
            Self::TMax => "t-max",
            Self::Branch => "branch",
        })
    }
}

/// One line of sweep output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: String,
    pub passed: bool,
    pub failed_checks: String,
    pub einstein_max: Option<f64>,
    pub holomorphic_k_min: Option<f64>,
    pub holomorphic_k_max: Option<f64>,
    pub min_margin: Option<f64>,
    /// First maximal interval of admissible `t` within the scan range.
    pub window_lo: Option<f64>,
    pub window_hi: Option<f64>,
}

fn apply(base: &Scenario, param: SweepParameter, value: &str) -> Result<Scenario> {
    let mut s = base.clone();
    let number = || {
        value
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("`{value}` is not a number")))
    };
    match param {
        SweepParameter::C => s.c = number()?,
        SweepParameter::Rho => s.set_rho(number()?),
        SweepParameter::TMax => s.t_max = number()?,
        SweepParameter::Branch => s.set_branch(value.parse::<Branch>()?)?,
    }
    s.name = format!("{}[{param}={value}]", base.name);
    Ok(s)
}

/// First maximal run of `t` in `(0, max(1, 2 t_max)]` where the structure
/// exists and its metric is positive definite.
pub fn admissible_window(s: &Scenario) -> Option<(f64, f64)> {
    let family = s.family();
    let span = (2.0 * s.t_max).max(1.0);
    let mut window: Option<(f64, f64)> = None;
    for k in 1..=WINDOW_STEPS {
        let t = span * k as f64 / WINDOW_STEPS as f64;
        let ok = family.at(t).is_ok_and(|pc| positivity_check(&pc).passes());
        match (ok, window) {
            (true, None) => window = Some((t, t)),
            (true, Some((lo, _))) => window = Some((lo, t)),
            (false, Some(_)) => break,
            (false, None) => {}
        }
    }
    window
}

fn row(param: SweepParameter, value: &str, outcome: Result<(Scenario, VerificationReport)>) -> SweepRow {
    let mut r = SweepRow {
        parameter: param.to_string(),
        value: value.to_string(),
        passed: false,
        failed_checks: String::new(),
        einstein_max: None,
        holomorphic_k_min: None,
        holomorphic_k_max: None,
        min_margin: None,
        window_lo: None,
        window_hi: None,
    };
    match outcome {
        Err(e) => r.failed_checks = format!("config: {e}"),
        Ok((s, report)) => {
            let residual = |name: &str| report.check(name).and_then(|c| c.residual);
            r.passed = report.passed;
            r.failed_checks = report
                .failures()
                .map(|c| c.name.as_str())
                .collect::<Vec<_>>()
                .join(";");
            r.einstein_max = residual("einstein.closed_form");
            r.holomorphic_k_min = residual("holomorphic.k_min");
            r.holomorphic_k_max = residual("holomorphic.k_max");
            r.min_margin = residual("positivity.min_margin");
            if let Some((lo, hi)) = admissible_window(&s) {
                r.window_lo = Some(lo);
                r.window_hi = Some(hi);
            }
        }
    }
    r
}

/// Re-run `base` once per grid value of `param`.
///
/// Invalid grid values yield a failing row instead of aborting the sweep.
pub fn sweep(base: &Scenario, param: SweepParameter, grid: &[String]) -> Vec<SweepRow> {
    grid.iter()
        .map(|value| {
            let outcome = apply(base, param, value)
                .and_then(|s| run_scenario(&s).map(|report| (s, report)));
            row(param, value, outcome)
        })
        .collect()
}

pub fn to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenario::preset;

    fn small(name: &str) -> Scenario {
        let mut s = preset(name).unwrap();
        s.t_grid = 2;
        s.points_per_t = 2;
        s
    }

    #[test]
    fn sphere_window_ends_at_one_half() {
        let (lo, hi) = admissible_window(&preset("sphere").unwrap()).unwrap();
        assert!(lo <= 0.01);
        assert!((hi - 0.5).abs() < 0.01, "{hi}");
    }

    #[test]
    fn sweep_over_c_on_case1() {
        let grid: Vec<String> = ["-1", "-0.5", "0.5", "1"].map(String::from).to_vec();
        let rows = sweep(&small("sphere-case1"), SweepParameter::C, &grid);
        assert_eq!(rows.len(), 4);
        // ρ > 0 with c < 0 makes λ negative: no admissible structure
        assert!(!rows[0].passed && rows[0].window_lo.is_none());
        assert!(rows[3].passed, "{rows:?}");
        let csv = to_csv(&rows).unwrap();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("parameter,value,passed"));
    }

    #[test]
    fn sweep_over_branch() {
        let grid: Vec<String> = ["-", "+"].map(String::from).to_vec();
        let rows = sweep(&small("sphere-case2-const"), SweepParameter::Branch, &grid);
        assert!(rows[0].passed, "{rows:?}");
        assert!(rows[1].window_lo.is_some() || !rows[1].passed);
    }

    #[test]
    fn rho_sweep_tracks_holomorphic_curvature() {
        let grid: Vec<String> = ["3", "6"].map(String::from).to_vec();
        let rows = sweep(&small("sphere-case1"), SweepParameter::Rho, &grid);
        for (r, k) in rows.iter().zip([2.0, 4.0]) {
            assert!(r.passed, "{r:?}");
            assert!((r.holomorphic_k_min.unwrap() - k).abs() < 1e-3);
            assert!((r.holomorphic_k_max.unwrap() - k).abs() < 1e-3);
        }
    }

    #[test]
    fn bad_values_become_failing_rows() {
        let rows = sweep(&small("sphere"), SweepParameter::Branch, &["+".into()]);
        assert!(!rows[0].passed);
        assert!(rows[0].failed_checks.starts_with("config:"));
        assert!("width".parse::<SweepParameter>().is_err());
    }
}
