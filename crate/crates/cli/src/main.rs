mod commands;
mod error;
mod eval;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lleinc::{NeighborMode, ReembedConfig, Strategy};

use crate::error::{CliError, CliResult};

/// Locally linear re-embedding of labeled vectors with intra-class neighborhoods.
///
/// Exit codes: 0 ok, 2 usage, 3 I/O, 4 data precondition, 5 configuration
/// precondition, 6 numerical failure. REEMBED_THREADS caps the worker
/// threads (0 or unset: one per core).
#[derive(Debug, Parser)]
#[command(name = "reembed", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic labeled dataset and its manifest.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Fit a re-embedding and save it as a model file.
    Fit(FitArgs),
    /// Map a dataset into a fitted model's space.
    Transform(TransformArgs),
    /// Classify a labeled dataset with a fitted model and score it.
    Classify(ClassifyArgs),
    /// Compare re-embedding strategies on a train/test split.
    Eval(EvalArgs),
    /// Evaluate strategies over a grid of target dimensions, as CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Subcommand)]
enum GenKind {
    /// Swiss roll with one band of the roll parameter per class (or several, interleaved).
    Swiss(SwissArgs),
    /// Gaussian clusters with a minimum center separation.
    Blobs(BlobsArgs),
}

#[derive(Debug, Args)]
struct SwissArgs {
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    classes: u32,
    /// Points per class, at least 2.
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
    per_class: u32,
    /// Standard deviation of the Gaussian noise added to every coordinate.
    #[arg(long, default_value_t = 0.0, value_parser = nonnegative)]
    noise: f64,
    /// Bands per class; classes alternate along the roll when above 1.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    bands: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; `.csv` selects CSV, anything else EMB1.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BlobsArgs {
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    classes: u32,
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
    per_class: u32,
    /// Vector width.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    dim: u32,
    /// Minimum distance between cluster centers.
    #[arg(long, default_value_t = 8.0, value_parser = nonnegative)]
    separation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Neighbors restricted to the point's class.
    Intra,
    /// Class-blind neighbors.
    Plain,
}

impl From<ModeArg> for NeighborMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Intra => NeighborMode::IntraClass,
            ModeArg::Plain => NeighborMode::Unconstrained,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    LleInc,
    Lle,
    None,
    All,
}

impl StrategyArg {
    fn expand(self) -> Vec<Strategy> {
        match self {
            StrategyArg::LleInc => vec![Strategy::LleInc],
            StrategyArg::Lle => vec![Strategy::Lle],
            StrategyArg::None => vec![Strategy::None],
            StrategyArg::All => Strategy::ALL.to_vec(),
        }
    }
}

/// Fit hyper-parameters shared by `fit`, `eval` and `sweep`.
#[derive(Debug, Args)]
struct FitOptions {
    /// Reconstruction neighbors per training point.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    neighbors: u32,
    /// Ridge factor on the local Gram matrix, scaled by its trace over the neighbor count.
    #[arg(long, default_value_t = ReembedConfig::DEFAULT_REGULARIZATION, value_parser = nonnegative)]
    reg: f64,
    /// Keep the constant bottom eigenvector instead of skipping it.
    #[arg(long)]
    literal_bottom: bool,
    /// Neighbors for out-of-sample points (default: --neighbors).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    c_test: Option<u32>,
    /// Shrink the neighbor count for classes too small for --neighbors.
    #[arg(long)]
    clamp: bool,
}

impl FitOptions {
    fn config(&self, target_dim: usize) -> ReembedConfig {
        let mut config = ReembedConfig::new(self.neighbors as usize, target_dim)
            .with_regularization(self.reg)
            .with_clamp(self.clamp);
        if self.literal_bottom {
            config = config.with_literal_bottom();
        }
        if let Some(c) = self.c_test {
            config = config.with_c_test(c as usize);
        }
        config
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Labeled training vectors (EMB1 or .csv).
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Intra)]
    mode: ModeArg,
    /// Target dimension.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    dim: u32,
    #[command(flatten)]
    fit: FitOptions,
    /// Model file to write.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TransformArgs {
    model: PathBuf,
    data: PathBuf,
    /// Re-embedded vectors, keeping the input labels; `.csv` selects CSV.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    model: PathBuf,
    data: PathBuf,
    /// Voters per query.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    e: u32,
    /// Write the JSON report here instead of standard output.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

/// Train/test inputs and few-shot resampling shared by `eval` and `sweep`.
#[derive(Debug, Args)]
struct SplitOptions {
    /// Training vectors, or the pool episodes are drawn from with --shots.
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long, value_enum, default_value_t = StrategyArg::All)]
    strategy: StrategyArg,
    /// Voters per query.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    e: u32,
    /// Comma-separated seeds; each draws a fresh few-shot episode from --train.
    #[arg(long, value_delimiter = ',', requires = "shots")]
    seeds: Vec<u64>,
    /// Training points per class in each episode.
    #[arg(long, requires = "seeds", value_parser = clap::value_parser!(u32).range(1..))]
    shots: Option<u32>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputFormat {
    Table,
    Json,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    split: SplitOptions,
    /// Target dimension.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    dim: u32,
    #[command(flatten)]
    fit: FitOptions,
    /// Name recorded in the report (default: the training file stem).
    #[arg(long)]
    task: Option<String>,
    /// Temperature of the contrastive diagnostic.
    #[arg(long, default_value_t = 0.05)]
    temperature: f64,
    /// Put the positive pair into the contrastive denominator too.
    #[arg(long)]
    infonce_standard: bool,
    /// What to print on standard output.
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
    /// Also write the JSON report to this file.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    split: SplitOptions,
    /// Comma-separated target dimensions; values above the admissible maximum are clamped.
    #[arg(long, value_delimiter = ',', required = true, value_parser = clap::value_parser!(u32).range(1..))]
    dims: Vec<u32>,
    #[command(flatten)]
    fit: FitOptions,
    /// Write the CSV here instead of standard output.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn nonnegative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("expected a finite nonnegative number, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn configure_threads() -> CliResult<()> {
    let threads = match std::env::var("REEMBED_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("REEMBED_THREADS must be a nonnegative integer, got {v:?}")))?,
        Err(_) => 0,
    };
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Gen { kind: GenKind::Swiss(a) } => commands::gen_swiss(&a),
        Command::Gen { kind: GenKind::Blobs(a) } => commands::gen_blobs(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Transform(a) => commands::transform(&a),
        Command::Classify(a) => commands::classify(&a),
        Command::Eval(a) => eval::eval(&a),
        Command::Sweep(a) => eval::sweep(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
