//! `rcm`: command-line front end for the random-cluster toolkit.
//!
//! Exit codes: 0 when the command succeeds and every checked property holds,
//! 1 when a property or certification check fails, 2 on usage or input errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "rcm",
    version,
    about = "Random-cluster model experiments and certificates"
)]
pub struct Cli {
    /// TOML file of default flag values (top-level keys, or a table named after the subcommand).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Graph file utilities.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Exact FK measure: weights to a measure file, per-edge marginals to stdout.
    Exact(ExactArgs),
    /// Decide stochastic domination between two measure files.
    Dominate(DominateArgs),
    /// Plain heat-bath chain.
    Sample(SampleArgs),
    /// Coupled Y <= X <= Z chain driven by an enhancement plan.
    Triple(TripleArgs),
    /// Exact kernel invariance check.
    KernelCheck(KernelArgs),
    /// Star or square device plan on a square box.
    Devices(DevicesArgs),
    /// Enhancement values of a plan.
    Epsilon(EpsilonArgs),
    /// Planar duality check.
    Dual(DualArgs),
    /// Exact disagreement bound between nested boxes.
    Disagreement(DisagreementArgs),
    /// Phase-diagram sweep of the plain chain.
    Scan(ScanArgs),
    /// Exact certificate of the classical and enhanced comparison inequalities.
    Certify(CertifyArgs),
}

#[derive(Subcommand, Debug)]
pub enum GraphCommand {
    /// Check a graph file and print a summary.
    Validate { file: PathBuf },
    /// Write a lattice box (with a rotation system for planar boxes).
    Lattice(LatticeArgs),
}

#[derive(Args, Debug)]
pub struct LatticeArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long)]
    pub side: usize,
    #[arg(long)]
    pub torus: bool,
    /// Drop the boundary (required by `dual`).
    #[arg(long)]
    pub no_boundary: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    /// free, wired, or blocks=<file>.
    #[arg(long, default_value = "free")]
    pub boundary: String,
}

#[derive(Args, Debug)]
pub struct ExactArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DominateArgs {
    #[arg(long)]
    pub lower: PathBuf,
    #[arg(long)]
    pub upper: PathBuf,
    /// CSV file for the coupling witness.
    #[arg(long)]
    pub witness: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum InitArg {
    Closed,
    Open,
}

#[derive(Args, Debug)]
pub struct ChainArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub steps: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub thin: u64,
    /// Steps run before the first emitted row; no default is claimed sufficient.
    #[arg(long, default_value_t = 0)]
    pub burn_in: u64,
    #[arg(long, value_enum, default_value = "closed")]
    pub init: InitArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
}

#[derive(Args, Debug)]
pub struct TripleArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    #[arg(long)]
    pub plan: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum VariantArg {
    Plain,
    Enhanced,
    Pair,
}

#[derive(Args, Debug)]
pub struct KernelArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Largest accepted residual (plain, enhanced) or marginal error (pair).
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DeviceArg {
    Star,
    Square,
}

#[derive(Args, Debug)]
pub struct DevicesArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum)]
    pub kind: DeviceArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum ModeArg {
    Exact,
    Mc,
}

#[derive(Args, Debug)]
pub struct EpsilonArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Required with `--mode mc`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DualArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct DisagreementArgs {
    #[arg(long)]
    pub host: PathBuf,
    /// Comma-separated host vertices.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub delta: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub sigma: Vec<usize>,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    /// Exterior configuration of Σ: hex word over host edges, `open` or `closed`.
    #[arg(long)]
    pub xi: String,
    /// Exterior configuration of Δ.
    #[arg(long)]
    pub tau: String,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    /// Custom graph; otherwise a lattice box from --dim/--side.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long)]
    pub side: Option<usize>,
    #[arg(long)]
    pub torus: bool,
    /// Comma list or start:stop:count.
    #[arg(long)]
    pub p_grid: String,
    #[arg(long)]
    pub q_grid: String,
    #[arg(long, default_value = "free")]
    pub boundary: String,
    #[arg(long, default_value_t = 0)]
    pub burn_in: u64,
    #[arg(long)]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub thin: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Plan files (repeat the flag or separate with commas).
    #[arg(long, value_delimiter = ',')]
    pub plan: Vec<PathBuf>,
    /// JSON report destination (stdout otherwise).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = match config::merge_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(commands::Outcome::Pass) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let property = e
                .downcast_ref::<rcm_core::Error>()
                .is_some_and(|c| matches!(c, rcm_core::Error::OrderingViolation { .. }));
            ExitCode::from(if property { 1 } else { 2 })
        }
    }
}
