//! `splinet`: build B-spline bases and their orthonormalizations, diagonalize
//! band matrices, project sampled data and print efficiency reports.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use splinet::SplineError;

#[derive(Parser)]
#[command(name = "splinet", version, about = "Orthonormal spline bases and dyadic splinets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a B-spline basis as sampled values and derivative matrices.
    Basis(BasisArgs),
    /// Orthonormalize a B-spline basis.
    Orthogonalize(OrthoArgs),
    /// Diagonalize a symmetric band matrix read from CSV.
    Diagonalize(DiagArgs),
    /// Decompose sampled data in a splinet.
    Project(ProjectArgs),
    /// Support, count, error and bound tables.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false, id = "knot_source")]
struct KnotSource {
    /// Number of knots, including both endpoints of [0, 1].
    #[arg(long = "knots")]
    count: Option<usize>,
    /// File of knots, one per line or comma separated.
    #[arg(long = "knots-file")]
    file: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SplineArgs {
    #[command(flatten)]
    source: KnotSource,
    /// Equally spaced knots instead of random ones (with --knots).
    #[arg(long, requires = "count")]
    equispaced: bool,
    /// Seed for random knots.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    order: usize,
    /// Sampling points over the knot range.
    #[arg(long, default_value_t = 512)]
    samples: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write an SVG line plot.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct BasisArgs {
    #[command(flatten)]
    spline: SplineArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    #[value(name = "gs-lr")]
    GsLr,
    #[value(name = "gs-rl")]
    GsRl,
    Twosided,
    Splinet,
}

#[derive(Args)]
struct OrthoArgs {
    #[command(flatten)]
    spline: SplineArgs,
    #[arg(long, value_enum, default_value = "splinet")]
    method: MethodArg,
    /// Stop the dyadic recursion after this level (splinet only).
    #[arg(long, conflicts_with = "tolerance")]
    stop_level: Option<usize>,
    /// Pick the stop level from the total error bound (splinet only).
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Args)]
struct DiagArgs {
    /// Dense CSV rows, or `i,j,value` triplets (0-based).
    #[arg(long)]
    matrix: PathBuf,
    /// Tuplet size; the band half-width may not exceed it.
    #[arg(long = "bandwidth-k")]
    bandwidth_k: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ProjectArgs {
    #[command(flatten)]
    spline: SplineArgs,
    /// CSV of `t,value` samples.
    #[arg(long)]
    data: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Table {
    Supports,
    Counts,
    Errors,
    Bounds,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(value_enum)]
    table: Table,
    #[arg(long, default_value_t = 1)]
    order: usize,
    /// Number of dyadic levels N; the basis has k (2^N - 1) elements.
    #[arg(long, default_value_t = 4)]
    levels: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// Failure with its exit code: 2 for bad input, 3 for numerical trouble.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<SplineError> for Failure {
    fn from(e: SplineError) -> Self {
        let numerical = e.is_numerical() || matches!(e, SplineError::NotSymmetric { .. });
        Self {
            code: if numerical { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Basis(a) => commands::basis(&a.spline),
        Command::Orthogonalize(a) => commands::orthogonalize(&a.spline, a.method, a.stop_level, a.tolerance),
        Command::Diagonalize(a) => commands::diagonalize(&a.matrix, a.bandwidth_k, &a.out),
        Command::Project(a) => commands::project(&a.spline, &a.data),
        Command::Report(a) => commands::report(a.table, a.order, a.levels, &a.out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
