mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, Result, EXIT_VALIDATION};

#[derive(Parser, Debug)]
#[command(name = "hetlab", version, about = "Escape exponents, saddle exit laws and Monte Carlo checks for noisy heteroclinic networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exponent calculus of an escape chain.
    Analyze(AnalyzeArgs),
    /// Closed-form single-saddle predictions.
    Predict(PredictArgs),
    /// Monte Carlo escape frequency of a chain at one noise level.
    Simulate(SimulateArgs),
    /// Escape frequencies along an eps ladder with a power-law fit.
    Fit(FitArgs),
    /// Timescale ladder and cluster weights of a periodic network.
    Hierarchy(HierarchyArgs),
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Chain JSON.
    #[arg(long)]
    chain: PathBuf,
    /// Write the report as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
enum Prediction {
    ExitTimeTail,
    LocalLimit,
    ExitDirection,
    TypicalLaw,
    Prefactor,
}

#[derive(Args, Debug, serde::Serialize)]
struct PredictArgs {
    /// JSON with `saddle`, optional `box` and, for the prefactor, the `next` saddle.
    #[arg(long)]
    saddle: PathBuf,
    #[arg(long, value_enum)]
    kind: Prediction,
    /// Entrance coordinate at its own scale (also the entrance mean for the prefactor).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    x: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Time shift in the exit-time tail.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    c: f64,
    /// Strip half-width in the exit-time tail.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Window for the local limit.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    b: f64,
    /// Variance of the Gaussian entrance for the prefactor; 0 means a point entrance.
    #[arg(long, default_value_t = 1.0)]
    entrance_variance: f64,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
struct ChainRunArgs {
    /// Chain JSON.
    #[arg(long)]
    chain: PathBuf,
    /// Time step; defaults to 1e-3 over the fastest rate.
    #[arg(long)]
    dt: Option<f64>,
    /// Overridden by HETLAB_SEED when set.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Transport without kicks or travel time between saddles.
    #[arg(long)]
    identity_maps: bool,
}

#[derive(Args, Debug, serde::Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    run: ChainRunArgs,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    samples: u64,
    /// Per-path CSV.
    #[arg(long)]
    record_paths: Option<PathBuf>,
    /// Summary JSON; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, serde::Serialize)]
struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    run: ChainRunArgs,
    /// Strictly decreasing, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05,0.025")]
    eps_ladder: Vec<f64>,
    /// Paths per rung.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args, Debug, serde::Serialize)]
struct HierarchyArgs {
    /// Network JSON.
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Graphviz file of the cluster-merge tree.
    #[arg(long)]
    dot: Option<PathBuf>,
}

fn dispatch(cli: Cli) -> Result<()> {
    let start = Instant::now();
    match cli.command {
        Command::Analyze(a) => commands::analyze(&a, start),
        Command::Predict(a) => commands::predict(&a, start),
        Command::Simulate(a) => commands::simulate(&a, start),
        Command::Fit(a) => commands::fit(&a, start),
        Command::Hierarchy(a) => commands::hierarchy(&a, start),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code as u8)
        }
    }
}
