mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Build, evaluate and check ReLU networks that interpolate lattice samples.
#[derive(Parser, Debug)]
#[command(name = "kuhnnet", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a target (or load a grid) and build an approximator.
    Build(BuildArgs),
    /// Evaluate a saved net at points read from a CSV file or stdin.
    Eval(EvalArgs),
    /// Run every verification check on a saved net; exit 1 on failure.
    Verify(VerifyArgs),
    /// Build the lattice net and the step-function baseline and compare them.
    Compare(CompareArgs),
    /// Memorize 1D samples with the two-layer or the deep construction.
    Memorize(MemorizeArgs),
    /// Evaluate the generalization bound, optionally over a sweep of N.
    Bound(BoundArgs),
    /// Build the step-function baseline alone.
    Baseline(BaselineArgs),
}

#[derive(Args, Debug, Clone)]
struct Source {
    /// Built-in target: linear, l1-norm, min-coords, ridge[:c], heaviside-perturbed, constant[:c].
    #[arg(long, conflicts_with = "grid")]
    target: Option<String>,
    /// Grid file (kuhnnet-grid/1 JSON, or CSV when the name ends in .csv).
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Input dimension (with --target).
    #[arg(long)]
    d: Option<usize>,
    /// Lattice resolution (with --target).
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct Variant {
    /// Comma-separated stage sizes for a sequential build, summing to (n+1)^d.
    #[arg(long, value_delimiter = ',', conflicts_with = "global")]
    shape: Option<Vec<usize>>,
    /// Prepend a clamp to [0,1]^d so the net is regular on all of R^d.
    #[arg(long)]
    global: bool,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    variant: Variant,
    /// Output path for the net (kuhnnet-net/1).
    #[arg(long)]
    out: PathBuf,
    /// Output path for the build report; printed to stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Net file.
    #[arg(long)]
    net: PathBuf,
    /// CSV of points, one per row; stdin when absent.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Scan {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Low-discrepancy points for error scans.
    #[arg(long, default_value_t = 100_000)]
    scan_points: usize,
    /// Random pairs for Lipschitz estimates.
    #[arg(long, default_value_t = 100_000)]
    pairs: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    net: PathBuf,
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    variant: Variant,
    #[command(flatten)]
    scan: Scan,
    /// Output path for the JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    target: String,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    scan: Scan,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MemorizeArgs {
    /// Samples as CSV `x,y` rows or a JSON list of pairs.
    #[arg(long)]
    samples: PathBuf,
    /// Hidden widths for the deep construction, e.g. 20,20,20.
    #[arg(long, value_delimiter = ',')]
    widths: Option<Vec<usize>>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BoundArgs {
    /// Depth Δ.
    #[arg(long)]
    depth: u64,
    /// Width W.
    #[arg(long)]
    width: u64,
    /// Lipschitz constant L of the class.
    #[arg(long, default_value_t = 1.0)]
    lip: f64,
    /// Lipschitz constant of the loss.
    #[arg(long, default_value_t = 1.0)]
    loss_lip: f64,
    #[arg(long)]
    d: usize,
    /// Sample count N.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Unspecified constant C (does not enter the formula).
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Unspecified constant C_{d,X}.
    #[arg(long, default_value_t = 1.0)]
    c_dx: f64,
    /// Print one row for each N = 2^10 .. 2^20 instead.
    #[arg(long)]
    sweep: bool,
}

#[derive(Args, Debug)]
struct BaselineArgs {
    #[arg(long)]
    target: String,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n: usize,
    /// Hölder constant ν.
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    /// Hölder exponent α.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Command::Build(a) => commands::build(a),
        Command::Eval(a) => commands::eval(a),
        Command::Verify(a) => commands::verify(a),
        Command::Compare(a) => commands::compare(a),
        Command::Memorize(a) => commands::memorize(a),
        Command::Bound(a) => commands::bound(a),
        Command::Baseline(a) => commands::baseline(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
