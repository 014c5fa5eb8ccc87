//! `phq`: moment tables, phase-space densities, quantization and the
//! verification suites from the command line.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 bad flags or
//! input files, 3 the requested moment diverges.

mod commands;
mod inputs;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phq_core::phase_density::Axis;
use phq_core::Error;

#[derive(Parser, Debug)]
#[command(name = "phq", version, about = "Moment operators of phase-space margins in a truncated Fock space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Moment polynomial and operator for a number state or a mixture.
    Moments(MomentsArgs),
    /// One-dimensional margin of the observable in a given state, as CSV.
    Margin(MarginArgs),
    /// Two-dimensional phase-space density, as CSV or raw f64.
    Density(DensityArgs),
    /// Operator integral of polynomial functions of the margins.
    Quantize(QuantizeArgs),
    /// Run a verification suite and write a JSON report.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct KernelArgs {
    /// Number state |n> generating the observable.
    #[arg(long)]
    n: Option<usize>,
    /// Mixture weights: delta:n, explicit:w0,w1,..., geometric:r or powerlaw:alpha.
    #[arg(long)]
    weights: Option<String>,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Grid half-width (falls back to PHQ_GRID_HALFWIDTH).
    #[arg(long)]
    halfwidth: Option<f64>,
    /// Grid point count (falls back to PHQ_GRID_POINTS).
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum AxisArg {
    X,
    Y,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::X => Axis::X,
            AxisArg::Y => Axis::Y,
        }
    }
}

#[derive(Args, Debug)]
struct MomentsArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    /// Moment order, 1..=12.
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value = "x")]
    axis: AxisArg,
    /// Truncation dimension of the operator matrix.
    #[arg(long, default_value_t = 32)]
    dim: usize,
    /// Build the operator even when sum n^k w_n diverges, provided the
    /// coefficients themselves are finite.
    #[arg(long)]
    formal: bool,
    /// Output path; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MarginArgs {
    /// basis:n or coeffs:FILE.json
    #[arg(long)]
    state: String,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long, value_enum, default_value = "x")]
    axis: AxisArg,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum DensityFormat {
    Csv,
    Bin,
}

#[derive(Args, Debug)]
struct DensityArgs {
    /// basis:n or coeffs:FILE.json
    #[arg(long)]
    state: String,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value = "csv")]
    format: DensityFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum QuantizeMode {
    /// h1(x)
    X,
    /// h1(x) + i h2(y)
    Complex,
    /// h1(x) + h2(y)
    Sum,
}

#[derive(Args, Debug)]
struct QuantizeArgs {
    #[arg(long, value_enum)]
    mode: QuantizeMode,
    /// Coefficients a0,a1,...,ak of h1 (ascending powers).
    #[arg(long, allow_hyphen_values = true)]
    h1: String,
    /// Coefficients of h2 for the complex and sum modes.
    #[arg(long, allow_hyphen_values = true)]
    h2: Option<String>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 32)]
    dim: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Identities,
    Oracle,
    LemmaQ2k,
    Mixtures,
    All,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    /// Override a tolerance, e.g. --tolerance oracle=1e-6. Repeatable.
    #[arg(long = "tolerance", value_name = "NAME=VALUE")]
    tolerances: Vec<String>,
    /// Seed for the random test states.
    #[arg(long, default_value_t = phq_core::verify_oracle::DEFAULT_SEED)]
    seed: u64,
    /// Report path; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure carrying its exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
    ChecksFailed(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Self::ChecksFailed(_) => 1,
            Self::Core(Error::DivergentMoment { .. }) => 3,
            Self::Usage(_) | Self::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(msg) => f.write_str(msg),
            Self::Core(e) => write!(f, "{e}"),
            Self::ChecksFailed(n) => write!(f, "{n} check(s) failed"),
        }
    }
}

type CliResult = Result<(), Failure>;

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Moments(a) => commands::moments(a),
        Command::Margin(a) => commands::margin(a),
        Command::Density(a) => commands::density(a),
        Command::Quantize(a) => commands::quantize(a),
        Command::Verify(a) => verify::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("phq: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
