//! `cotlift`: run verification scenarios and parameter sweeps.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use cotlift::coefficients::Branch;
use cotlift::harness::{
    preset_catalog, run_scenario, sweep, to_csv, Scenario, SweepParameter,
};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "cotlift", version, about = "Verify natural lifted Kähler structures on cotangent bundles of space forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check of one scenario and emit a JSON report.
    Verify {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Suppress the per-check summary on stderr.
        #[arg(long)]
        quiet: bool,
    },
    /// Re-run a scenario for each value of one parameter; emits CSV.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Parameter to vary: c, rho, t-max or branch.
        #[arg(long)]
        vary: String,
        /// Comma-separated values, e.g. `-1,-0.5,0.5,1` or `+,-`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        grid: Vec<String>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in scenarios.
    ListPresets,
    /// Print a scenario as TOML, as a starting point for a scenario file.
    Show {
        /// Preset name or scenario file.
        scenario: String,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Preset name or path to a TOML scenario file.
    #[arg(long, default_value = "sphere-case1")]
    scenario: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Base points per sampled t value.
    #[arg(long)]
    samples: Option<usize>,
    /// Number of sampled t values.
    #[arg(long)]
    t_grid: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    t_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_max: Option<f64>,
    /// Einstein constant; also replaces the ρ of the λ-rule.
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<f64>,
    /// Branch of the square-root λ family: + or -.
    #[arg(long, allow_hyphen_values = true)]
    branch: Option<String>,
}

impl ScenarioArgs {
    fn build(&self) -> cotlift::Result<Scenario> {
        let mut s = Scenario::resolve(&self.scenario)?;
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(k) = self.samples {
            s.points_per_t = k;
        }
        if let Some(k) = self.t_grid {
            s.t_grid = k;
        }
        if let Some(v) = self.t_min {
            s.t_min = v;
        }
        if let Some(v) = self.t_max {
            s.t_max = v;
        }
        if let Some(rho) = self.rho {
            s.set_rho(rho);
        }
        if let Some(b) = &self.branch {
            s.set_branch(b.parse::<Branch>()?)?;
        }
        s.validate()?;
        Ok(s)
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_CONFIG)
}

fn verdict(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListPresets => {
            for (name, about) in preset_catalog() {
                println!("{name:<22} {about}");
            }
            ExitCode::SUCCESS
        }
        Command::Show { scenario } => match Scenario::resolve(&scenario).and_then(|s| s.to_toml()) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => config_error(e),
        },
        Command::Verify {
            scenario,
            out,
            quiet,
        } => {
            let s = match scenario.build() {
                Ok(s) => s,
                Err(e) => return config_error(e),
            };
            let start = Instant::now();
            let report = match run_scenario(&s) {
                Ok(r) => r,
                Err(e) => return config_error(e),
            };
            let json = match report.to_json() {
                Ok(j) => j + "\n",
                Err(e) => return config_error(e),
            };
            if let Err(e) = emit(out.as_ref(), &json) {
                return config_error(e);
            }
            if !quiet {
                eprint!("{}", report.summary());
            }
            eprintln!("wall time: {:.2?}", start.elapsed());
            verdict(report.passed)
        }
        Command::Sweep {
            scenario,
            vary,
            grid,
            out,
        } => {
            let s = match scenario.build() {
                Ok(s) => s,
                Err(e) => return config_error(e),
            };
            let param: SweepParameter = match vary.parse() {
                Ok(p) => p,
                Err(e) => return config_error(e),
            };
            let start = Instant::now();
            let rows = sweep(&s, param, &grid);
            let table = match to_csv(&rows) {
                Ok(t) => t,
                Err(e) => return config_error(e),
            };
            if let Err(e) = emit(out.as_ref(), &table) {
                return config_error(e);
            }
            eprintln!("wall time: {:.2?}", start.elapsed());
            verdict(rows.iter().all(|r| r.passed))
        }
    }
}
