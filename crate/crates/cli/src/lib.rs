//! The `ergo` command-line tool: model ingestion, command dispatch and
//! report emission.

pub mod commands;
pub mod error;
pub mod model;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::CliError;
pub use report::Report;

#[derive(Debug, Parser)]
#[command(name = "ergo", version, about = "Ergodicity, coupling and Poisson-equation analysis of finite Markov chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write plot data as CSV.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Print a short human-readable summary instead of JSON.
    #[arg(long, global = true)]
    pub human: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Contraction coefficients, invariant law, convergence envelope and r(V).
    Analyze(AnalyzeArgs),
    /// Coupling of two initial laws: exact tails and simulated coupling.
    Couple(CoupleArgs),
    /// Asymptotic variance and LLN/CLT experiments.
    Limits(LimitsArgs),
    /// Log-moment function, rate function and exact tail check.
    Ldp(LdpArgs),
    /// Poisson equation in the whole space or with a Dirichlet boundary.
    Poisson(PoissonArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub model: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1)]
    pub n0: usize,
}

#[derive(Debug, Args)]
pub struct CoupleArgs {
    pub model: PathBuf,
    /// State label or initial-law name.
    #[arg(long)]
    pub from: String,
    #[arg(long)]
    pub to: String,
    /// Two independent copies; exact meeting-time tail.
    #[arg(long, conflicts_with = "vaserstein")]
    pub simple: bool,
    /// Maximal per-step coupling; exact bound plus simulation.
    #[arg(long)]
    pub vaserstein: bool,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub n_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Mean,
    Clt,
}

#[derive(Debug, Args)]
pub struct LimitsArgs {
    pub model: PathBuf,
    #[arg(long)]
    pub observable: String,
    #[arg(long, value_enum, default_value_t = Mode::Clt)]
    pub mode: Mode,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub replicas: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// State label or initial-law name; defaults to the first state.
    #[arg(long)]
    pub init: Option<String>,
}

#[derive(Debug, Args)]
pub struct LdpArgs {
    pub model: PathBuf,
    #[arg(long)]
    pub observable: String,
    #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
    pub beta_min: f64,
    #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
    pub beta_max: f64,
    #[arg(long, default_value_t = 81)]
    pub grid: usize,
    #[arg(long, requires = "n", allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    #[arg(long, requires = "epsilon")]
    pub n: Option<usize>,
    /// Starting state for the exact tail; defaults to the first state.
    #[arg(long)]
    pub init: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Linear,
    Series,
    Mc,
}

#[derive(Debug, Args)]
pub struct PoissonArgs {
    pub model: PathBuf,
    /// Source term `f`.
    #[arg(long)]
    pub observable: String,
    /// Solve in the whole space (the default when no boundary is given).
    #[arg(long, conflicts_with = "boundary")]
    pub whole: bool,
    #[arg(long)]
    pub boundary: Option<String>,
    /// Observable holding the boundary values; zero when omitted.
    #[arg(long, requires = "boundary")]
    pub boundary_data: Option<String>,
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long, value_enum, default_value_t = Method::Linear)]
    pub method: Method,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Columns of plot data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotData {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl PlotData {
    pub fn new(header: &[&str]) -> Self {
        PlotData { header: header.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    pub fn write(&self, path: &std::path::Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub struct Output {
    pub report: Report,
    pub plot: PlotData,
}

/// Runs one command and writes its report and plot data where requested.
/// Returns the rendered report text when it goes to stdout.
pub fn execute(cli: &Cli) -> Result<Option<String>, CliError> {
    let output = commands::run(&cli.command)?;
    if let Some(path) = &cli.csv {
        output.plot.write(path)?;
    }
    let text = if cli.human { output.report.to_human() } else { output.report.to_json() };
    match &cli.out {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}
