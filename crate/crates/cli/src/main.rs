use std::path::PathBuf;
use std::process::ExitCode;

use avibound::{Error, Settings};
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

/// Local error bounds for affine variational inequalities: generation,
/// solving, enumeration and numerical verification.
#[derive(Debug, Parser)]
#[command(name = "avibound", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Instance file, or the name of a canned suite entry (`lcp1d`, `lcp1d.json`, ...).
    #[arg(long, global = true)]
    pub instance: Option<PathBuf>,
    /// Master seed for every sampler.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Residual radius ε for error-bound checks.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub eps: f64,
    /// Sample count; the default depends on the subcommand.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Comparison tolerance for points and values.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    /// Directory for reports.
    #[arg(long, global = true, default_value = "reports")]
    pub out: PathBuf,
    /// Worker threads, 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
}

impl GlobalOpts {
    pub fn settings(&self) -> Settings {
        let mut s = Settings::default();
        s.tol.cmp = self.tol;
        s
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random or canned instance plus its manifest under --out.
    Generate(GenerateArgs),
    /// Euclidean projection onto a polyhedron.
    Project(ProjectArgs),
    /// Natural residual R(x) of an AVI.
    Residual(PointArgs),
    /// Fixed-point or extragradient iteration.
    Solve(SolveArgs),
    /// Pieces of the solution set, or of R⁻¹(y) with --y.
    Enumerate(EnumerateArgs),
    /// Sampled local error bound d(x, C*) ≤ c‖R(x)‖.
    VerifyErrorBound(ErrorBoundArgs),
    /// Upper Lipschitz check of R⁻¹ (AVI) or Lipschitz modulus (multifunction).
    VerifyLipschitz(LipschitzArgs),
    /// Minimax equality and domain characterization of a multifunction.
    VerifyMinimax,
    /// Error-bound constants along a diagonal truncation family.
    TruncationStudy(TruncationArgs),
    /// Every canned entry, one report each plus a summary.
    Suite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Avi,
    Gpm,
    Truncation,
    Canned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MonotonicityArg {
    StronglyMonotone,
    MonotoneSkew,
    Indefinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpectrumArg {
    Harmonic,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    FixedPoint,
    Extragradient,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    pub kind: GenKind,
    /// File stem; defaults to `<kind>_<seed>`.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Constraints of C (avi).
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    /// Dimension of y (gpm).
    #[arg(long, default_value_t = 2)]
    pub r: usize,
    /// Equality rows (gpm).
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Coupled inequality rows (gpm).
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    #[arg(long, value_enum, default_value_t = MonotonicityArg::StronglyMonotone)]
    pub monotonicity: MonotonicityArg,
    /// Bounded C (avi) or bounded sections (gpm).
    #[arg(long)]
    pub bounded: bool,
    #[arg(long, value_enum, default_value_t = SpectrumArg::Harmonic)]
    pub spectrum: SpectrumArg,
    /// Canned entry name (canned).
    #[arg(long)]
    pub entry: Option<String>,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    /// Comma-separated point.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub x: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub x: Vec<f64>,
    /// Polyhedron file; defaults to the feasible set C of --instance.
    #[arg(long)]
    pub set: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Extragradient)]
    pub method: MethodArg,
    /// Step size; defaults to 0.3/(1 + ‖M‖).
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    /// Stopping residual; defaults to max(1e-6, --tol).
    #[arg(long)]
    pub stop: Option<f64>,
    /// Starting point; defaults to the origin.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    /// Enumerate R⁻¹(y) instead of the solution set.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct ErrorBoundArgs {
    /// Also run the halving search for the largest stabilized ε.
    #[arg(long)]
    pub local_radius: bool,
}

#[derive(Debug, Args)]
pub struct LipschitzArgs {
    /// Base point ȳ for the AVI check; defaults to 0.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y: Option<Vec<f64>>,
    /// Fresh pairs for the multifunction holdout check.
    #[arg(long, default_value_t = 500)]
    pub holdout: usize,
    /// Allowed ratio over the training estimate on holdout pairs.
    #[arg(long, default_value_t = 1.05)]
    pub factor: f64,
}

#[derive(Debug, Args)]
pub struct TruncationArgs {
    #[arg(long, value_enum, default_value_t = SpectrumArg::Harmonic)]
    pub spectrum: SpectrumArg,
    #[arg(long, value_delimiter = ',', default_values_t = [5, 10, 20, 40])]
    pub dims: Vec<usize>,
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::CapExceeded { .. } => 3,
        Error::InvalidInput(_)
        | Error::Schema(_)
        | Error::Io(_)
        | Error::DimensionMismatch { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if cli.global.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
