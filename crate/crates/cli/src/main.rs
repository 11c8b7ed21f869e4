//! `occkit` command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data, format or I/O
//! errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use occkit_core::edge::KernelKind;
use occkit_core::metrics::MetricSet;

#[derive(Debug, Parser)]
#[command(name = "occkit", version, about = "Panoptic occupancy toolkit: synthesis, lifting, edges and ray metrics")]
struct Cli {
    /// Worker threads for data-parallel kernels. Outputs do not depend on it.
    #[arg(long, global = true, env = "OCCKIT_THREADS", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    threads: u32,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labeled scene and the matching camera rig.
    Synth(SynthArgs),
    /// Lift synthetic per-pixel outputs into a BEV feature grid.
    Lift(LiftArgs),
    /// Extract pseudo edge labels from a scene's BEV semantics.
    Edge(EdgeArgs),
    /// Compare a predicted scene against ground truth.
    Eval(EvalArgs),
    /// Check analytic loss gradients against finite differences.
    GradCheck(GradCheckArgs),
    /// Time the data-parallel kernels sequentially and in parallel.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    objects: usize,
    /// Output scene (OCCG).
    #[arg(long)]
    out: PathBuf,
    /// Output rig config (TOML).
    #[arg(long)]
    rig: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LiftMode {
    Lss,
    Gauss,
    Hybrid,
}

#[derive(Debug, Args)]
struct LiftArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    rig: PathBuf,
    #[arg(long, value_enum, default_value_t = LiftMode::Hybrid)]
    mode: LiftMode,
    /// Weight of the Gaussian grid in hybrid mode.
    #[arg(long, default_value_t = 0.6, value_parser = unit_interval)]
    alpha: f64,
    #[arg(long, default_value_t = 118, value_parser = clap::value_parser!(u32).range(1..))]
    bins: u32,
    #[arg(long, default_value_t = 1.0)]
    dmin: f64,
    #[arg(long, default_value_t = 60.0)]
    dmax: f64,
    /// Depth noise sigma in meters.
    #[arg(long, default_value_t = 0.2, value_parser = non_negative)]
    noise: f64,
    /// Pixel sampling stride.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    stride: u32,
    /// Output BEV CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelArg {
    Sobel,
    Prewitt,
    Laplacian,
}

impl From<KernelArg> for KernelKind {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Sobel => KernelKind::Sobel,
            KernelArg::Prewitt => KernelKind::Prewitt,
            KernelArg::Laplacian => KernelKind::Laplacian,
        }
    }
}

#[derive(Debug, Args)]
struct EdgeArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, value_enum, default_value_t = KernelArg::Sobel)]
    kernel: KernelArg,
    #[arg(long, default_value_t = 3, value_parser = kernel_size)]
    size: usize,
    /// Output edge map: `.csv` for a row,col,value listing, anything else for PGM.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    rig: PathBuf,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    stride: u32,
    /// Comma-separated subset of miou,rayiou,raypq.
    #[arg(long, default_value = "miou,rayiou,raypq", value_parser = metric_set)]
    metrics: MetricSet,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GradCheckArgs {
    #[arg(long, default_value_t = occkit_core::gradcheck::DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Repetitions per kernel and thread count.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    iterations: u32,
    #[arg(long)]
    out: PathBuf,
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be finite and >= 0"))
    }
}

fn kernel_size(s: &str) -> Result<usize, String> {
    match s {
        "3" | "5" | "7" => Ok(s.parse().expect("digit")),
        _ => Err(format!("kernel size must be 3, 5 or 7, got '{s}'")),
    }
}

fn metric_set(s: &str) -> Result<MetricSet, String> {
    s.parse().map_err(|e: occkit_core::Error| e.to_string())
}

/// Why a command failed.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(occkit_core::Error),
    /// The command ran but its check did not pass.
    Check(String),
}

impl From<occkit_core::Error> for Failure {
    fn from(e: occkit_core::Error) -> Self {
        Failure::Data(e)
    }
}

fn dispatch(command: Command, threads: u32) -> Result<(), Failure> {
    match command {
        Command::Synth(a) => commands::synth(&a),
        Command::Lift(a) => commands::lift(&a),
        Command::Edge(a) => commands::edge(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::GradCheck(a) => commands::grad_check(&a),
        Command::Bench(a) => commands::bench(&a, threads),
    }
}

#[cfg(feature = "parallel")]
fn run(cli: Cli) -> Result<(), Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads as usize)
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start {} worker threads: {e}", cli.threads)))?;
    let threads = cli.threads;
    pool.install(|| dispatch(cli.command, threads))
}

#[cfg(not(feature = "parallel"))]
fn run(cli: Cli) -> Result<(), Failure> {
    dispatch(cli.command, 1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
