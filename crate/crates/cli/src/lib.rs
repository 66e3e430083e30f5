//! `swapgrid` command-line front end: argument parsing, data loading and
//! result files (CSV, SVG, run manifest).

pub mod commands;
pub mod manifest;
pub mod svg;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] swapgrid::ModelError),
    #[error(transparent)]
    Sim(#[from] swapgrid_sim::SimError),
    #[error("{0}")]
    MissingInput(String),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Machine-readable category printed on stderr.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Model(e) => e.category(),
            CliError::Sim(e) => e.category(),
            CliError::MissingInput(_) => "missing_input",
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
        }
    }

    /// One-line JSON object for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.category(), "message": self.to_string() }).to_string()
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "swapgrid", version, about = "Battery-swapping network design with frequency regulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-period minimum availability eta_z from an AGC trace.
    Eta(EtaArgs),
    /// Solve the selected configurations.
    Optimize(OptimizeArgs),
    /// Sweep one axis across all selected configurations.
    Sweep(SweepArgs),
    /// Monte-Carlo simulation of one architecture.
    Simulate(SimulateArgs),
    /// Four-configuration comparison, radar scores and sensitivity surfaces.
    Report(ReportArgs),
}

/// Inputs shared by the model commands.
#[derive(Debug, Clone, Args)]
pub struct ModelInputs {
    /// Parameter file (TOML); baseline values when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// AGC trace CSV (`timestamp,signal`); needs --prices as well.
    #[arg(long)]
    pub agc: Option<PathBuf>,
    /// Clearing prices CSV (`period,price_usd_per_mw`); needs --agc as well.
    #[arg(long)]
    pub prices: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// Monte-Carlo settings for the decentralized calibration.
#[derive(Debug, Clone, Args)]
pub struct CalibrationArgs {
    #[arg(long, default_value_t = 20240831)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EtaArgs {
    /// AGC trace CSV; the bundled sample day when absent.
    #[arg(long)]
    pub agc: Option<PathBuf>,
    #[arg(long, default_value_t = 0.75)]
    pub theta: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub inputs: ModelInputs,
    #[command(flatten)]
    pub calibration: CalibrationArgs,
    /// Configurations to solve (repeat or comma-separate); all four by default.
    #[arg(long = "configuration", value_delimiter = ',')]
    pub configurations: Vec<String>,
    /// Demand scale applied to the loaded parameters.
    #[arg(long, default_value_t = 1.0)]
    pub demand_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    DemandScale,
    PowerMultiplier,
    BatteryCostMultiplier,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub inputs: ModelInputs,
    #[command(flatten)]
    pub calibration: CalibrationArgs,
    #[arg(long, value_enum, default_value_t = AxisArg::DemandScale)]
    pub axis: AxisArg,
    /// Comma-separated axis values; 1..10 (demand) or 0.5..5 otherwise.
    #[arg(long, value_delimiter = ',')]
    pub points: Vec<f64>,
    /// Configurations to include (repeat or comma-separate); all four by default.
    #[arg(long = "configuration", value_delimiter = ',')]
    pub configurations: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ArchitectureArg {
    Centralized,
    Decentralized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemandArg {
    Stationary,
    TimeVarying,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProcessArg {
    Normal,
    CompoundPoisson,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ArchitectureArg::Centralized)]
    pub architecture: ArchitectureArg,
    #[arg(long, default_value_t = 1.0)]
    pub demand_scale: f64,
    /// Charging-station density (km^-2); the regulation-off optimum when absent.
    #[arg(long)]
    pub rho_c: Option<f64>,
    /// Reorder quantity; the regulation-off optimum when absent.
    #[arg(long)]
    pub q: Option<f64>,
    /// Decentralized spare stock (batteries/km^2); from --eps-bs when absent.
    #[arg(long)]
    pub r_b: Option<f64>,
    /// Decentralized stockout target; calibrated when absent.
    #[arg(long)]
    pub eps_bs: Option<f64>,
    /// Measured hours.
    #[arg(long, default_value_t = 20_000.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 240.0)]
    pub warmup: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub steps_per_lead: usize,
    #[arg(long, value_enum, default_value_t = DemandArg::Stationary)]
    pub demand: DemandArg,
    #[arg(long, value_enum, default_value_t = ProcessArg::Normal)]
    pub process: ProcessArg,
    #[arg(long, default_value_t = 50)]
    pub batches: usize,
    /// Simulated area (km^2).
    #[arg(long, default_value_t = 100.0)]
    pub area: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub inputs: ModelInputs,
    #[command(flatten)]
    pub calibration: CalibrationArgs,
    #[arg(long, default_value_t = 5.0)]
    pub demand_scale: f64,
}

/// Run one command; returns the files written (manifest first).
pub fn run(cli: &Cli, raw_args: Vec<String>) -> Result<Vec<PathBuf>> {
    match &cli.command {
        Command::Eta(a) => commands::eta(a, raw_args),
        Command::Optimize(a) => commands::optimize(a, raw_args),
        Command::Sweep(a) => commands::sweep(a, raw_args),
        Command::Simulate(a) => commands::simulate(a, raw_args),
        Command::Report(a) => commands::report(a, raw_args),
    }
}
