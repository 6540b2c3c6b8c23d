//! The `grapho` command line. Exit codes: 0 success, 1 usage or
//! configuration error, 2 runtime failure.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use grapho_core::MotifFactor;

pub use config::{CorpusFormat, RunConfig, DEFAULT_LAMBDA_SWEEP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "grapho", version, about = "Graphon oracles, basis fitting and joint training for graph corpora")]
pub struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory. Nothing is written outside it.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for per-graph solves.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Raise log verbosity (repeatable). `RUST_LOG` takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the oracle graphon of a corpus.
    Estimate(EstimateArgs),
    /// Draw graphs from a graphon.
    Sample(SampleArgs),
    /// Fit basis graphons and the coefficient encoder to an oracle.
    Fit(FitArgs),
    /// Train the toy classifier jointly with the reconstruction loss.
    Train(TrainArgs),
    /// Compare two corpora by oracle discrepancy and summary statistics.
    Distance(DistanceArgs),
    /// Check the motif counting bound between an oracle and a prediction.
    Verify(VerifyArgs),
    /// Summary statistics of a corpus.
    Stats(CorpusArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// TUDataset directory, edge-list file or directory of edge lists.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<CorpusFormat>,
    /// Accept a TUDataset directory without a graph labels file.
    #[arg(long)]
    pub allow_unlabeled: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Number of blocks of the estimated oracle.
    #[arg(long)]
    pub oracle_size: Option<usize>,
    #[arg(long)]
    pub barycenter_iters: Option<usize>,
    /// Proximal step of the transport solver, relative to the value ranges.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub outer_iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub oracle: OracleArgs,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, value_name = "FILE")]
    pub graphon: Option<PathBuf>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Oracle graphon JSON; estimated from the corpus when absent.
    #[arg(long, value_name = "FILE")]
    pub oracle: Option<PathBuf>,
    /// Number of basis graphons.
    #[arg(long)]
    pub bases: Option<usize>,
    #[arg(long)]
    pub basis_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub feature_dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub oracle: OracleArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub oracle: OracleArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Weight of the reconstruction loss.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Train once for each of 0, 0.05, 0.5, 1 and 6.
    #[arg(long, conflicts_with = "lambda")]
    pub lambda_sweep: bool,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Corpus compared against `--input`, in the same format.
    #[arg(long, value_name = "PATH")]
    pub other: Option<PathBuf>,
    #[command(flatten)]
    pub oracle: OracleArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Oracle graphon JSON; estimated from `--input` when absent.
    #[arg(long, value_name = "FILE")]
    pub oracle: Option<PathBuf>,
    /// Predicted graphon JSON.
    #[arg(long, value_name = "FILE", conflicts_with = "bases_file")]
    pub predicted: Option<PathBuf>,
    /// Fitted bases; the prediction uses the corpus-mean coefficients.
    #[arg(long = "bases", value_name = "FILE")]
    pub bases_file: Option<PathBuf>,
    /// Resample both graphons to this size first (the exact cut norm allows
    /// at most 25 blocks).
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long, value_enum)]
    pub motif_factor: Option<MotifFactorArg>,
    #[command(flatten)]
    pub oracle_opts: OracleArgs,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum MotifFactorArg {
    Edges,
    Nodes,
}

impl From<MotifFactorArg> for MotifFactor {
    fn from(f: MotifFactorArg) -> Self {
        match f {
            MotifFactorArg::Edges => MotifFactor::Edges,
            MotifFactorArg::Nodes => MotifFactor::Nodes,
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.verbose);
    match commands::execute(cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
}
