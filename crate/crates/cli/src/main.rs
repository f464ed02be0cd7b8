//! `gge`: command-line front end for the generalized Gibbs ensemble laboratory.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "gge", version, about = "Generalized Gibbs ensembles of the Ablowitz–Ladik lattice and the Schur flow")]
#[command(args_override_self = true, propagate_version = true)]
pub struct Cli {
    /// Master seed; every output records it.
    #[arg(long, env = "GGE_SEED", default_value_t = 0, global = true)]
    pub seed: u64,
    /// Worker threads for Monte Carlo (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".", global = true)]
    pub out: PathBuf,
    /// Format of tabular outputs; reports are always JSON.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample Verblunsky coefficients from an ensemble.
    Sample(SampleArgs),
    /// Monte Carlo density of states.
    Dos(DosArgs),
    /// Minimize the circular or interval free-energy functional.
    Minimize(MinimizeArgs),
    /// Compare the density of states with the β-derivative of the equilibrium measure.
    Relation(RelationArgs),
    /// Integrate the AL or Schur flow.
    Dynamics(DynamicsArgs),
    /// Run the numerical check suite.
    Verify(VerifyArgs),
    /// Estimate the lattice free energy by thermodynamic integration.
    FreeEnergy(FreeEnergyArgs),
}

pub const SUBCOMMANDS: [&str; 7] = ["sample", "dos", "minimize", "relation", "dynamics", "verify", "free-energy"];

#[derive(Debug, Clone, Args, Serialize)]
pub struct EnsembleArgs {
    /// al, schur, circular or jacobi.
    #[arg(long, default_value = "al")]
    pub ensemble: String,
    /// Number of coefficients (particles for jacobi).
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long)]
    pub beta: f64,
    /// `c0=..,c1=..,s1=..` on the circle or `t0=..,t1=..` on [-1, 1].
    #[arg(long, default_value = "0")]
    pub potential: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McmcArgs {
    /// Emitted states.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Burn-in sweeps (default 10 × matrix size).
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Site updates between states (default: matrix size).
    #[arg(long)]
    pub thinning: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 0.5)]
    pub damping: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iterations: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SampleArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    /// Also write eigenangles (or interval points) per sample.
    #[arg(long)]
    pub angles: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct DosArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    #[arg(long, default_value_t = 64)]
    pub bins: usize,
    /// Use a wrapped Gaussian kernel of this width instead of a histogram.
    #[arg(long)]
    pub kde_bandwidth: Option<f64>,
    #[arg(long, default_value_t = 512)]
    pub kde_grid: usize,
    /// Fourier (circle) or Chebyshev (interval) moments to report.
    #[arg(long, default_value_t = 32)]
    pub k_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainArg {
    Torus,
    Interval,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct MinimizeArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value = "0")]
    pub potential: String,
    /// Defaults to the domain of the potential.
    #[arg(long, value_enum)]
    pub domain: Option<DomainArg>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Also write the β-derivative of β μ_β with this step.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct RelationArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 256)]
    pub k_max: usize,
    #[arg(long, default_value_t = 4)]
    pub moment_order: usize,
    /// Pass threshold on D.
    #[arg(long, default_value_t = gge_core::lab::DEFAULT_D_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct DynamicsArgs {
    /// al or schur.
    #[arg(long, default_value = "al")]
    pub flow: String,
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_final: f64,
    /// Steps between recorded frames.
    #[arg(long, default_value_t = 10)]
    pub record_every: usize,
    /// Initial coefficients are uniform in the disk (interval for schur) of this radius.
    #[arg(long, default_value_t = 0.5)]
    pub radius: f64,
    /// Highest trace power in the conservation report.
    #[arg(long, default_value_t = 4)]
    pub ell_max: usize,
    /// Forward-difference step of the Lax residual (also run at half this step).
    #[arg(long, default_value_t = 1e-4)]
    pub lax_probe: f64,
    /// Run the ensemble invariance test with this many GGE samples.
    #[arg(long)]
    pub invariance_samples: Option<usize>,
    /// GGE parameters for the invariance test.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value = "0")]
    pub potential: String,
    /// Flow time of the invariance test.
    #[arg(long, default_value_t = 1.0)]
    pub invariance_time: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct VerifyArgs {
    /// Run only these checks (repeatable).
    #[arg(long = "check", value_enum)]
    pub checks: Vec<commands::CheckName>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct FreeEnergyArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value = "0")]
    pub potential: String,
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    /// Coupling points on [0, 1]; an odd count enables the Simpson error estimate.
    #[arg(long, default_value_t = 11)]
    pub s_points: usize,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    /// Compare with ∂_β(β F_C) from the circular solver using this step.
    #[arg(long)]
    pub compare_delta: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let args = match config::merge_config_args(args, &SUBCOMMANDS) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(commands::Outcome::Pass) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Fail(reason)) => {
            eprintln!("FAILED: {reason}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
