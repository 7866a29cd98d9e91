//! Command-line front end for `gvf-core`: configuration, subcommand dispatch and the CSV
//! and JSON file formats.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{RunConfig, Settings};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "gvf", version, about = "Guiding vector fields: simulate, map and verify")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand. Each maps onto a `section.key` config entry.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Config file with [section] headers and key = value lines; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in scenario: circle2d, circle3d, counterexample1.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Ambient dimension of an inline scenario.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Surface expression of an inline scenario (repeat once per surface).
    #[arg(long)]
    pub surface: Vec<String>,
    /// Comma-separated positive gains.
    #[arg(long)]
    pub gains: Option<String>,
    /// Box as lo:hi per axis, comma separated.
    #[arg(long = "box", allow_hyphen_values = true)]
    pub bbox: Option<String>,
    /// Excluded balls as x,y,..@radius, separated by ';'.
    #[arg(long, allow_hyphen_values = true)]
    pub exclude: Option<String>,
    /// rk4 (fixed step) or rk45 (adaptive).
    #[arg(long)]
    pub method: Option<String>,
    /// Integration step.
    #[arg(long = "h")]
    pub time_step: Option<String>,
    /// Time horizon.
    #[arg(long = "t")]
    pub horizon: Option<String>,
    /// Integrate the normalized field.
    #[arg(long)]
    pub normalize: bool,
    /// Ellipsoid level, or "auto".
    #[arg(long = "R")]
    pub radius: Option<String>,
    /// Seed for sampled checks.
    #[arg(long)]
    pub seed: Option<String>,
    /// Worker threads for batch work (default: available parallelism).
    #[arg(long)]
    pub workers: Option<String>,
    /// Extra section.key=value overrides.
    #[arg(long = "set")]
    pub set: Vec<String>,
    /// Output path (standard output if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate one trajectory and write it as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Start point, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        /// Integrate the reversed field.
        #[arg(long)]
        backward: bool,
    },
    /// Classify a grid of start points and write the labels as CSV.
    Doa {
        #[command(flatten)]
        common: Common,
        /// Cells per axis: one number, or one per axis.
        #[arg(long)]
        res: Option<String>,
        /// Path of the JSON summary (default: next to --out).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run sampled verification suites and write a JSON report; exits 1 on any failure.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Suites: orthogonality, lyapunov, invariance, exitset, absorption, convergence.
        #[arg(long, value_delimiter = ',')]
        suite: Vec<String>,
        /// Samples per suite.
        #[arg(long)]
        samples: Option<String>,
    },
    /// Map the points of a CSV file through the global chart.
    Chart {
        #[command(flatten)]
        common: Common,
        /// CSV of points, one per row.
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Trace the level set e = level and write it as CSV.
    Fiber {
        #[command(flatten)]
        common: Common,
        /// Level, one value per surface, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        level: Option<String>,
        /// Tracing step.
        #[arg(long)]
        step: Option<String>,
    },
    /// Locate zeros of the field and write a JSON report.
    Singular {
        #[command(flatten)]
        common: Common,
        /// Grid step of the search.
        #[arg(long)]
        step: Option<String>,
    },
    /// Trace the path and write its polyline as CSV.
    Atlas {
        #[command(flatten)]
        common: Common,
        /// Tracing step.
        #[arg(long)]
        step: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Doa { .. } => "doa",
            Command::Verify { .. } => "verify",
            Command::Chart { .. } => "chart",
            Command::Fiber { .. } => "fiber",
            Command::Singular { .. } => "singular",
            Command::Atlas { .. } => "atlas",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Simulate { common, .. }
            | Command::Doa { common, .. }
            | Command::Verify { common, .. }
            | Command::Chart { common, .. }
            | Command::Fiber { common, .. }
            | Command::Singular { common, .. }
            | Command::Atlas { common, .. } => common,
        }
    }

    /// Config file, then `--set`, then named flags.
    fn settings(&self) -> Result<Settings, CliError> {
        let common = self.common();
        let mut s = match &common.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        for a in &common.set {
            s.apply_assignment(a)?;
        }
        let mut put = |key: &str, value: Option<&str>| -> Result<(), CliError> {
            match value {
                Some(v) => s.set(key, v),
                None => Ok(()),
            }
        };
        put("scenario.name", common.scenario.as_deref())?;
        put("scenario.dim", common.dim.map(|d| d.to_string()).as_deref())?;
        if !common.surface.is_empty() {
            put("scenario.surfaces", Some(&common.surface.join(";")))?;
        }
        put("scenario.gains", common.gains.as_deref())?;
        put("scenario.box", common.bbox.as_deref())?;
        put("scenario.exclusions", common.exclude.as_deref())?;
        put("integrator.method", common.method.as_deref())?;
        put("integrator.h", common.time_step.as_deref())?;
        put("integrator.t_max", common.horizon.as_deref())?;
        if common.normalize {
            put("integrator.normalize", Some("true"))?;
        }
        put("wazewski.R", common.radius.as_deref())?;
        put("run.seed", common.seed.as_deref())?;
        put("run.workers", common.workers.as_deref())?;
        match self {
            Command::Simulate { x0, backward, .. } => {
                put("simulate.x0", x0.as_deref())?;
                if *backward {
                    put("simulate.backward", Some("true"))?;
                }
            }
            Command::Doa { res, .. } => put("doa.res", res.as_deref())?,
            Command::Verify { suite, samples, .. } => {
                if !suite.is_empty() {
                    put("verify.suites", Some(&suite.join(",")))?;
                }
                put("verify.samples", samples.as_deref())?;
            }
            Command::Chart { points, .. } => put("chart.points", points.as_ref().and_then(|p| p.to_str()))?,
            Command::Fiber { level, step, .. } => {
                put("fiber.level", level.as_deref())?;
                put("fiber.step", step.as_deref())?;
            }
            Command::Singular { step, .. } => put("singular.step", step.as_deref())?,
            Command::Atlas { step, .. } => put("atlas.step", step.as_deref())?,
        }
        Ok(s)
    }
}

/// Parses `args` (including the program name), runs the subcommand and returns the
/// process exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("gvf {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    let config = RunConfig::resolve(command.settings()?)?;
    let out = command.common().out.clone();
    let task = || commands::dispatch(command, &config, out.as_deref());
    match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?
            .install(task),
        None => task(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "[scenario]\nname = circle3d\n[integrator]\nh = 0.01\n").unwrap();
        let cli = Cli::try_parse_from(["gvf", "atlas", "--config", path.to_str().unwrap(), "--scenario", "circle2d"]).unwrap();
        let s = cli.command.settings().unwrap();
        assert_eq!(s.get("scenario.name"), Some("circle2d"));
        assert_eq!(s.get("integrator.h"), Some("0.01"));
    }
}
