use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod data;
mod svg;

use commands::{AlphaArgs, AreArgs, DiagnoseArgs, ExperimentArgs, FitArgs, SimulateDataArgs};

const DEFAULT_SEED: u64 = 20210601;

#[derive(Parser)]
#[command(name = "noisylab", version, about = "Noisy group labelling: simulation, fitting and diagnostics")]
struct Cli {
    /// Worker threads. Defaults to all cores; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// RNG seed. Falls back to $NOISYLAB_SEED, then a fixed default.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo relative efficiency on the canonical Gaussian problem.
    SimulateAre(AreArgs),
    /// Write a simulated Gaussian dataset with labels and DM votes.
    SimulateData(SimulateDataArgs),
    /// Fit logistic regression to ground-truth labels or vote counts.
    Fit(FitArgs),
    /// Estimate the overdispersion α₀ with a bootstrap interval.
    EstimateAlpha(AlphaArgs),
    /// Vote-group means and observed-versus-expected vote counts.
    Diagnose(DiagnoseArgs),
    /// Train/test experiment with simulated votes on a labelled dataset.
    Experiment(ExperimentArgs),
    /// Re-run the command recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(noisylab::Error),
    Io(std::io::Error),
    Json(serde_json::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Json(e) => write!(f, "json error: {e}"),
        }
    }
}

impl From<noisylab::Error> for CliError {
    fn from(e: noisylab::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Json(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Core(noisylab::Error::Csv(e))
    }
}

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_FIT: u8 = 4;
pub const EXIT_IDENTIFIABILITY: u8 = 5;

impl CliError {
    fn exit_code(&self) -> u8 {
        use noisylab::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::InvalidParameter(_)) => EXIT_USAGE,
            CliError::Core(E::Separation { .. } | E::Rank(_) | E::TooManyFailures { .. }) => EXIT_FIT,
            CliError::Core(E::Identifiability(_) | E::Degenerate(_)) => EXIT_IDENTIFIABILITY,
            CliError::Core(_) | CliError::Io(_) | CliError::Json(_) => EXIT_DATA,
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("NOISYLAB_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("NOISYLAB_SEED is not an integer: `{v}`"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let seed = resolve_seed(cli.seed)?;
    match cli.command {
        Command::SimulateAre(a) => commands::simulate_are(&a, seed),
        Command::SimulateData(a) => commands::simulate_data(&a, seed),
        Command::Fit(a) => commands::fit(&a, seed),
        Command::EstimateAlpha(a) => commands::estimate_alpha(&a, seed),
        Command::Diagnose(a) => commands::diagnose(&a, seed),
        Command::Experiment(a) => commands::experiment(&a, seed),
        Command::Replay { manifest, out } => commands::replay(&manifest, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("noisylab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
