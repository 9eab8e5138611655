use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "epictrl",
    version,
    allow_negative_numbers = true,
    about = "Extinction thresholds, rate allocation and simulation of SIS epidemics on temporal and adaptive networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Model construction.
    Net {
        #[command(subcommand)]
        action: NetAction,
    },
    /// Epidemic threshold beta_c over a grid of recovery rates.
    Threshold(ThresholdArgs),
    /// Budget-constrained rate allocation.
    Optimize(OptimizeArgs),
    /// Gillespie trajectories, metastable sweeps and exact marginals.
    Simulate(SimulateArgs),
    /// Run an oracle suite and report pass/fail.
    Validate(ValidateArgs),
    /// Geometric programs.
    Gp {
        #[command(subcommand)]
        action: GpAction,
    },
    /// Export the stability matrix of a model as dense CSV.
    Matrix(MatrixArgs),
    /// Re-run the command recorded in a manifest.
    Replay { manifest: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum NetAction {
    Build {
        #[command(subcommand)]
        kind: BuildKind,
    },
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ClassRateArgs {
    #[arg(long)]
    pub p1: f64,
    #[arg(long)]
    pub q1: f64,
    #[arg(long)]
    pub p2: f64,
    #[arg(long)]
    pub q2: f64,
    #[arg(long)]
    pub p3: f64,
    #[arg(long)]
    pub q3: f64,
}

#[derive(Debug, Subcommand)]
#[command(allow_negative_numbers = true)]
#[allow(clippy::enum_variant_names)]
pub enum BuildKind {
    /// Static Karate Club graph.
    #[command(allow_negative_numbers = true)]
    StaticKarate {
        #[arg(long)]
        out: PathBuf,
    },
    /// Eight-configuration Markovian Karate network.
    #[command(allow_negative_numbers = true)]
    MarkovKarate {
        #[command(flatten)]
        rates: ClassRateArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Karate network with one independent two-state process per edge.
    #[command(allow_negative_numbers = true)]
    AmeiKarate {
        #[command(flatten)]
        rates: ClassRateArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Adaptive SIS model on the Karate graph with homogeneous rates.
    #[command(allow_negative_numbers = true)]
    AsisKarate {
        #[arg(long)]
        phi: f64,
        #[arg(long)]
        psi: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ThresholdArgs {
    pub model: PathBuf,
    /// `lo:hi:step`.
    #[arg(long)]
    pub delta_grid: String,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct OptimizeArgs {
    pub model: PathBuf,
    #[arg(long)]
    pub budget: f64,
    /// Natural infection rate; defaults to the model's threshold at `delta-low` (Markovian models only).
    #[arg(long)]
    pub beta_bar: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub delta_low: f64,
    /// Shape of the infection cost.
    #[arg(long, default_value_t = 0.1)]
    pub q: f64,
    /// Shape of the recovery cost.
    #[arg(long, default_value_t = 0.1)]
    pub r: f64,
    /// Infection rate of every node (adaptive models).
    #[arg(long, default_value_t = 0.16)]
    pub beta: f64,
    /// Recovery rate of every node (adaptive models).
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub phi_low: f64,
    #[arg(long, default_value_t = 1.5)]
    pub phi_high: f64,
    /// Cutting-cost shift as a multiple of `phi-high`.
    #[arg(long, default_value_t = 100.0)]
    pub phi_hat_factor: f64,
    /// Shape of the cutting cost.
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub feas_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub opt_tol: f64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SimulateArgs {
    pub model: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    #[arg(long, default_value_t = 50.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Homogeneous infection rate (ignored with `--allocation` or on sweeps).
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Take the rates from an allocation file.
    #[arg(long)]
    pub allocation: Option<PathBuf>,
    /// Comma-separated initially infected nodes; all nodes when absent.
    #[arg(long)]
    pub infected: Option<String>,
    /// `beta=lo:hi:step,phi=lo:hi:step` (adaptive models).
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    pub burn_in: f64,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Exact marginals from the master equation on the `lo:hi:step` grid.
    #[arg(long)]
    pub exact: Option<String>,
    /// Event log of a single run as JSON lines.
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ValidateArgs {
    #[arg(long)]
    pub suite: String,
    /// Number of random programs in the gp-oracle suite.
    #[arg(long, default_value_t = 20)]
    pub gp_cases: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum GpAction {
    Solve {
        problem: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        feas_tol: f64,
        #[arg(long, default_value_t = 1e-8)]
        opt_tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct MatrixArgs {
    pub model: PathBuf,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub out: PathBuf,
}
