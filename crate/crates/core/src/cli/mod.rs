//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 non-convergence,
//! 3 verification failure.

mod commands;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::ConfigError;
use crate::dynamics::{DynamicsError, Integrator};
use crate::model::ModelError;
use crate::solver::SolveError;

pub use manifest::RunManifest;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_VERIFY: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "oligopoly",
    version,
    about = "Equilibria, adjustment dynamics and efficiency of multi-market oligopolies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the Nash equilibrium aggregate and its KKT certificate.
    Solve(SolveArgs),
    /// Integrate the gradient adjustment process and write the trajectory.
    Simulate(SimulateArgs),
    /// Compare the equilibrium with the social optimum.
    Social(SocialArgs),
    /// Check a candidate aggregate against the equilibrium conditions.
    Verify(VerifyArgs),
    /// Sweep the common marginal payoff and tabulate each market's allocation.
    Figure(FigureArgs),
    /// Solve several games, optionally in parallel.
    Batch(BatchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    /// bisect and pga on separable costs (reporting their discrepancy), pga otherwise
    Auto,
    Bisect,
    Pga,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitArg {
    Uniform,
    Random,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorArg {
    ProjectedEuler,
    Rk4Interior,
}

impl From<IntegratorArg> for Integrator {
    fn from(arg: IntegratorArg) -> Self {
        match arg {
            IntegratorArg::ProjectedEuler => Integrator::ProjectedEuler,
            IntegratorArg::Rk4Interior => Integrator::Rk4Interior,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    /// KKT residual target.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    pub config: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    /// Write the result here (plus a run manifest) instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    pub config: PathBuf,
    #[arg(long, value_enum, default_value_t = InitArg::Uniform)]
    pub init: InitArg,
    /// Initial profile for `--init file`: a JSON array of per-player rows.
    #[arg(long)]
    pub init_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,
    #[arg(long, default_value_t = 1e3)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1000)]
    pub stride: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value_t = IntegratorArg::ProjectedEuler)]
    pub method: IntegratorArg,
    /// Trajectory CSV path; the summary then goes to stdout. Without it the
    /// CSV goes to stdout and the summary to stderr.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SocialArgs {
    pub config: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    pub config: PathBuf,
    /// JSON array of per-market totals, or an object with an `s_star` array.
    pub candidate: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FigureArgs {
    pub config: PathBuf,
    /// Defaults to the solved ν* minus half its magnitude.
    #[arg(long, allow_negative_numbers = true)]
    pub nu_min: Option<f64>,
    /// Defaults to the solved ν* plus half its magnitude.
    #[arg(long, allow_negative_numbers = true)]
    pub nu_max: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BatchArgs {
    #[arg(required = true)]
    pub configs: Vec<PathBuf>,
    /// One `<stem>.ne.json` per config is written here.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::new(EXIT_CONFIG, e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::new(EXIT_CONFIG, e.to_string())
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        let code = match e {
            SolveError::NotSeparable | SolveError::Model(_) => EXIT_CONFIG,
            _ => EXIT_NOT_CONVERGED,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Solve(e) => e.into(),
            DynamicsError::Model(_) | DynamicsError::Options(_) => {
                CliError::new(EXIT_CONFIG, e.to_string())
            }
            _ => CliError::new(EXIT_NOT_CONVERGED, e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(EXIT_CONFIG, format!("i/o error: {e}"))
    }
}

/// Runs a parsed command; `Ok` carries the exit code of a completed run
/// (non-zero when the result did not converge or failed verification).
pub fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Solve(args) => commands::solve(&args),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Social(args) => commands::social(&args),
        Command::Verify(args) => commands::verify(&args),
        Command::Figure(args) => commands::figure(&args),
        Command::Batch(args) => commands::batch(&args),
    }
}

/// Parses `args` and runs the command, printing errors to stderr.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message.trim_end());
            ExitCode::from(e.code)
        }
    }
}
