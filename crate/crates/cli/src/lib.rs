//! Command-line front end of `convexmin`.
//!
//! `argmin` and `geninv` print a JSON document for one function. The
//! `experiment` subcommands read a JSON config, write a CSV series with a
//! `.meta.json` sidecar and a `verdict.json` into the output directory, and
//! exit with 0 on PASS, 1 on FAIL and 2 on usage or config errors.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;

#[derive(Debug, Parser)]
#[command(
    name = "convexmin",
    version,
    about = "Exact minimum sets of univariate convex functions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Smallest and largest minimizer of one function.
    Argmin(FunctionArgs),
    /// Generalized inverses at level `y`: of the one-sided derivatives for a
    /// PWL spec, of the function itself for an expression.
    Geninv(GeninvArgs),
    /// Convergence experiments.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Debug, Args)]
pub struct FunctionArgs {
    /// Function spec (JSON).
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    pub spec: Option<PathBuf>,
    /// Config file with `"kind": "argmin"` or `"kind": "geninv"`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bisection width target for expression specs.
    #[arg(long)]
    pub tol: Option<f64>,
    /// smallest, largest, midpoint or fraction:LAMBDA.
    #[arg(long)]
    pub policy: Option<String>,
    /// Directory for a copy of the result and its sidecar.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GeninvArgs {
    #[command(flatten)]
    pub function: FunctionArgs,
    /// Level of the inverse.
    #[arg(long, allow_negative_numbers = true)]
    pub y: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Semicontinuity of sigma and tau along a deterministic sequence.
    Converge(ExperimentArgs),
    /// Distributional, almost-sure and in-probability argmin limits.
    ArgminLimits(ExperimentArgs),
    /// Fubini identity and the equivalent forms of a.s. uniqueness.
    Uniqueness(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed of the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Overrides the main tolerance of the config.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Overrides the selection policy of the config.
    #[arg(long)]
    pub policy: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Compute(convexmin::Error),
    #[error("{0}")]
    Io(String),
}

impl From<convexmin::Error> for CliError {
    fn from(e: convexmin::Error) -> Self {
        use convexmin::Error as E;
        match e {
            E::Parse(_)
            | E::ModelInvalid(_)
            | E::GridMismatch(_)
            | E::GridTooNarrow { .. }
            | E::GridTooSparse(_)
            | E::InvalidPwl(_)
            | E::InvalidSchedule(_)
            | E::NoBracket => CliError::Config(e.to_string()),
            other => CliError::Compute(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) | CliError::Io(_) => 1,
        }
    }
}

/// Outcome of a command that completed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// No verdict, or a PASS verdict.
    Pass,
    Fail,
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Argmin(a) => commands::argmin(&a),
        Command::Geninv(g) => commands::geninv(&g),
        Command::Experiment(ExperimentCommand::Converge(a)) => commands::converge(&a),
        Command::Experiment(ExperimentCommand::ArgminLimits(a)) => commands::argmin_limits(&a),
        Command::Experiment(ExperimentCommand::Uniqueness(a)) => commands::uniqueness(&a),
    }
}
