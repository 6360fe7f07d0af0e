//! `lowrank`: generators, solvers and experiment drivers for low-rank
//! Gauss–Newton methods.
//!
//! Exit codes: 0 converged, 2 iteration budget exhausted, 3 numerical
//! failure, 64 usage error, 1 I/O failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lowrank_gn::solvers::{DualStep, Rho, WStep};
use lowrank_gn::Error;

#[derive(Parser, Debug)]
#[command(name = "lowrank", version, about = "Gauss-Newton solvers for low-rank matrix problems")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags accepted by every subcommand. They override `--config`.
#[derive(Args, Debug)]
pub struct Common {
    /// Seed for every generator and random start.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// key=value run description; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Iteration trace CSV (a file stem for sense-compare).
    #[arg(long, global = true)]
    pub trace_out: Option<PathBuf>,
    /// key=value summary of the run.
    #[arg(long, global = true)]
    pub result_out: Option<PathBuf>,
    /// Record wall-clock milliseconds in traces (breaks byte-identical reruns).
    #[arg(long, global = true)]
    pub timing: bool,
    /// Iteration budget [default: 500]
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
    /// Stationarity and step tolerance [default: 1e-6]
    #[arg(long, global = true)]
    pub eps1: Option<f64>,
    /// Relative objective tolerance [default: 1e-4]
    #[arg(long, global = true)]
    pub eps2: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Matrix completion on integer data or a Matrix Market coordinate file.
    Complete(CompleteArgs),
    /// Rank-r factorization of a dense matrix with singular values by Rayleigh-Ritz.
    Factorize(FactorizeArgs),
    /// Robust rank-r recovery under the entrywise l1 loss.
    #[command(name = "recover-l1")]
    RecoverL1(RecoverL1Args),
    /// Symmetric factorization B ~ UUᵀ.
    Sym(SymArgs),
    /// Full-step GN against alternating minimization on Gaussian sensing.
    #[command(name = "sense-compare")]
    SenseCompare(SenseCompareArgs),
    /// Fill in unknown pixels of a dense matrix from a mask of known ones.
    Inpaint(InpaintArgs),
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompletionSolver {
    Lsgn,
    Fsgn,
    Adm,
    GnAdmm,
    RadAdmm,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorizeSolver {
    Fsgn,
    Lsgn,
    Adm,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymKind {
    Psd,
    Indefinite,
}

#[derive(Args, Debug)]
pub struct CompleteArgs {
    /// Rows of the generated instance [default: 100]
    #[arg(long)]
    pub m: Option<usize>,
    /// Columns of the generated instance [default: 200]
    #[arg(long)]
    pub n: Option<usize>,
    /// Target rank [default: 5]
    #[arg(long)]
    pub r: Option<usize>,
    /// Observed fraction [default: 0.5]
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Observation noise standard deviation [default: 0]
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Observations as a Matrix Market coordinate file instead of a generator.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// [default: lsgn]
    #[arg(long, value_enum)]
    pub solver: Option<CompletionSolver>,
    /// W-step of the ADMM schemes.
    #[arg(long)]
    pub option: Option<WStep>,
    /// ADMM penalty, a number or `auto`.
    #[arg(long)]
    pub rho: Option<Rho>,
}

#[derive(Args, Debug)]
pub struct FactorizeArgs {
    /// [default: 64]
    #[arg(long)]
    pub m: Option<usize>,
    /// [default: 64]
    #[arg(long)]
    pub n: Option<usize>,
    /// [default: 6]
    #[arg(long)]
    pub r: Option<usize>,
    /// Dense matrix (.csv or Matrix Market array) instead of the clustered generator.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// [default: fsgn]
    #[arg(long, value_enum)]
    pub solver: Option<FactorizeSolver>,
}

#[derive(Args, Debug)]
pub struct RecoverL1Args {
    /// [default: 64]
    #[arg(long)]
    pub m: Option<usize>,
    /// [default: 64]
    #[arg(long)]
    pub n: Option<usize>,
    /// [default: 2]
    #[arg(long)]
    pub r: Option<usize>,
    /// Fraction of corrupted entries [default: 0.02]
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Spike magnitude [default: 5]
    #[arg(long)]
    pub magnitude: Option<f64>,
    /// Dense matrix (.csv or Matrix Market array) instead of the generator.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Penalty, a number or `auto` (inverse mean magnitude of B).
    #[arg(long)]
    pub rho: Option<Rho>,
    /// Multiplier step, `unit` or `rho`.
    #[arg(long)]
    pub dual_step: Option<DualStep>,
}

#[derive(Args, Debug)]
pub struct SymArgs {
    /// [default: 32]
    #[arg(long)]
    pub m: Option<usize>,
    /// [default: 2]
    #[arg(long)]
    pub r: Option<usize>,
    /// Generated matrix type [default: psd]
    #[arg(long, value_enum)]
    pub kind: Option<SymKind>,
    /// Symmetric dense matrix (.csv or Matrix Market array).
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SenseCompareArgs {
    /// [default: 64]
    #[arg(long)]
    pub m: Option<usize>,
    /// [default: 64]
    #[arg(long)]
    pub n: Option<usize>,
    /// [default: 8]
    #[arg(long)]
    pub r: Option<usize>,
    /// Measurements as a multiple of r(m + n) [default: 0.5]
    #[arg(long)]
    pub l_ratio: Option<f64>,
    /// Iteration budget shared by both schemes [default: 300]
    #[arg(long)]
    pub iters: Option<usize>,
    /// Measurement noise standard deviation [default: 0]
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Use a sparse Gaussian map with this density.
    #[arg(long)]
    pub density: Option<f64>,
    /// Independent instances with seeds seed, seed+1, ...; run in parallel.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
}

#[derive(Args, Debug)]
pub struct InpaintArgs {
    /// Damaged image (.csv or Matrix Market array).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Matrix Market coordinate file listing the known pixels.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// [default: 5]
    #[arg(long)]
    pub r: Option<usize>,
    /// [default: lsgn]
    #[arg(long, value_enum)]
    pub solver: Option<CompletionSolver>,
    /// Recovered image (.csv or .mtx).
    #[arg(long)]
    pub out: PathBuf,
}

/// Why a command stopped early.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 64,
            Failure::Core(e) => match e {
                Error::Io(_) | Error::Csv(_) => 1,
                Error::RankDeficient { .. }
                | Error::ConvergenceFailure { .. }
                | Error::LinesearchExhausted(_)
                | Error::NonFinite(_) => 3,
                _ => 64,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(msg) => write!(f, "usage error: {msg}"),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 64 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("lowrank: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
