//! `osmm`: generate instances, multiply, verify, sketch and benchmark from
//! the command line.
//!
//! Exit status: 0 on success, 1 when a promise or a verification fails, 2 on
//! bad input.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use thiserror::Error;

use config::Config;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed files, impossible parameters.
    #[error("{0}")]
    Input(String),
    /// A promise or a check did not hold.
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "osmm",
    version,
    about = "Output-sparse matrix multiplication over exact rings"
)]
struct Cli {
    /// File of key=value defaults (seed, ring, confidence, sketch, ...).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Log more; repeat for debug output.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a planted instance and write A, B and C = AB.
    Gen(GenArgs),
    /// Multiply two matrix files.
    Multiply(MultiplyArgs),
    #[command(subcommand)]
    Verify(VerifyCommand),
    #[command(subcommand)]
    Sketch(SketchCommand),
    #[command(subcommand)]
    Expander(ExpanderCommand),
    /// Run algorithms over a grid of generated instances and print CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    /// Ring tag: Z, Fp:<p> or F2e:<b>[:<modulus-hex>].
    #[arg(long)]
    pub ring: Option<String>,
    /// Inputs get at most ceil(n^delta_in) nonzeros.
    #[arg(long)]
    pub delta_in: f64,
    /// The product gets at most ceil(n^delta_out) nonzeros.
    #[arg(long)]
    pub delta_out: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// random, rank or boundary.
    #[arg(long)]
    pub planting: Option<String>,
    /// Directory for A.mtx, B.mtx and C.mtx.
    #[arg(short, long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct MultiplyArgs {
    /// det, rand, naive or sparse.
    #[arg(long)]
    pub alg: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub a: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub b: PathBuf,
    /// Sparsity budget, promising nnz(AB) <= t^2.
    #[arg(long, conflicts_with = "nnz_bound")]
    pub t: Option<usize>,
    /// Promised bound on nnz(AB); sets t = ceil(sqrt(bound)).
    #[arg(long)]
    pub nnz_bound: Option<usize>,
    /// Promised output density nnz(AB) <= n^delta; sets t = ceil(n^(delta/2)).
    #[arg(long, conflicts_with_all = ["t", "nnz_bound"])]
    pub delta: Option<f64>,
    /// Verifier seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Verifier confidence exponent c.
    #[arg(long)]
    pub confidence: Option<u32>,
    /// Check the deterministic result; exit 1 if it is wrong.
    #[arg(long)]
    pub post_verify: bool,
    /// auto, certified, identity or theory.
    #[arg(long)]
    pub sketch: Option<String>,
    /// dense, sparse or auto.
    #[arg(long)]
    pub strategy: Option<String>,
    /// Print ring operation counts to stderr.
    #[arg(long)]
    pub counts: bool,
    /// Output file; standard output if omitted.
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum VerifyCommand {
    /// Columns on which C differs from AB; exit 0 iff there are none.
    Colmmv(ColmmvArgs),
}

#[derive(Debug, Args)]
pub struct ColmmvArgs {
    #[arg(long, value_name = "FILE")]
    pub a: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub b: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub c: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub confidence: Option<u32>,
}

#[derive(Debug, Subcommand)]
enum SketchCommand {
    /// Measure a vector file with H.
    Measure(MeasureArgs),
    /// Recover a t-sparse vector from its measurement; exit 1 on failure.
    Recover(RecoverArgs),
}

#[derive(Debug, Args)]
pub struct SketchShape {
    /// Sparsity the measurement is built for.
    #[arg(long)]
    pub t: usize,
    /// auto, certified, identity or theory.
    #[arg(long, conflicts_with = "graph")]
    pub sketch: Option<String>,
    /// Use this expander instead of building one.
    #[arg(long, value_name = "FILE")]
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[arg(long, value_name = "FILE")]
    pub x: PathBuf,
    #[command(flatten)]
    pub shape: SketchShape,
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    #[arg(long, value_name = "FILE")]
    pub z: PathBuf,
    /// Length of the measured vector.
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub shape: SketchShape,
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum ExpanderCommand {
    /// Build a graph and write it.
    Gen(ExpanderGenArgs),
    /// Exhaustively check (K, eps)-expansion; exit 1 with a violating set.
    Verify(ExpanderVerifyArgs),
    /// Print size, degree, overlap and fingerprint.
    Stats(ExpanderStatsArgs),
}

#[derive(Debug, Args)]
pub struct ExpanderGenArgs {
    /// pv, random or certified.
    #[arg(long, default_value = "pv")]
    pub kind: String,
    #[arg(long)]
    pub left: usize,
    /// Field size (pv), a power of two.
    #[arg(long)]
    pub q: Option<u64>,
    /// Polynomial length n (pv).
    #[arg(long)]
    pub poly_len: Option<usize>,
    /// Number of powers per neighbor (pv).
    #[arg(long)]
    pub m: Option<usize>,
    /// Power base (pv).
    #[arg(long)]
    pub h: Option<u64>,
    /// Left degree (random).
    #[arg(long)]
    pub degree: Option<usize>,
    /// Right size (random).
    #[arg(long)]
    pub right: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Expansion target K (certified).
    #[arg(long)]
    pub k: Option<usize>,
    /// Expansion slack, as a fraction (certified).
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExpanderVerifyArgs {
    #[arg(long, value_name = "FILE")]
    pub graph: PathBuf,
    #[arg(long)]
    pub k: usize,
    /// Defaults to 1/12.
    #[arg(long)]
    pub eps: Option<String>,
    /// Most subsets to enumerate.
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ExpanderStatsArgs {
    #[arg(long, value_name = "FILE")]
    pub graph: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub ring: Option<String>,
    /// Matrix sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub delta_in: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub delta_out: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub planting: Option<String>,
    /// Algorithms: dense, sparse, det, rand.
    #[arg(long, value_delimiter = ',', default_value = "dense,sparse,det,rand")]
    pub alg: Vec<String>,
    /// Timed runs per algorithm.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// auto, certified, identity or theory.
    #[arg(long)]
    pub sketch: Option<String>,
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Gen(args) => commands::gen(&cfg, &args),
        Command::Multiply(args) => commands::multiply(&cfg, &args),
        Command::Verify(VerifyCommand::Colmmv(args)) => commands::colmmv(&cfg, &args),
        Command::Sketch(SketchCommand::Measure(args)) => commands::measure(&cfg, &args),
        Command::Sketch(SketchCommand::Recover(args)) => commands::recover(&cfg, &args),
        Command::Expander(ExpanderCommand::Gen(args)) => commands::expander_gen(&cfg, &args),
        Command::Expander(ExpanderCommand::Verify(args)) => commands::expander_verify(&cfg, &args),
        Command::Expander(ExpanderCommand::Stats(args)) => commands::expander_stats(&args),
        Command::Bench(args) => commands::bench(&cfg, &args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("osmm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
