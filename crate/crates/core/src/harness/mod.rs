//! Scenario runner: presets, seeded sampling, the full check pipeline,
//! reports and parameter sweeps.

pub mod report;
pub mod run;
pub mod scenario;
pub mod sweep;

pub use report::{Bound, CheckRecord, CheckStatus, VerificationReport, WorstPoint};
pub use run::{run_scenario, sample_points, PointSample};
pub use scenario::{preset, preset_catalog, preset_names, Scenario, TSampling};
pub use sweep::{admissible_window, sweep, to_csv, SweepParameter, SweepRow};
