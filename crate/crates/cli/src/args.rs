use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "qcnn-plateau", version, about = "Gradient-variance experiments and exact lower bounds for QCNNs")]
pub struct Cli {
    /// Worker threads (defaults to the number of cores). Results do not
    /// depend on this value.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo variance of a QCNN gradient over random initialisations.
    Variance(VarianceArgs),
    /// Exact lower bound on the gradient variance.
    Bound(BoundArgs),
    /// Numerical checks of the integration identities and tables.
    Verify {
        #[command(subcommand)]
        target: VerifyTarget,
    },
    /// Expected gradient magnitude of the pooling-only model.
    Pooling(PoolingArgs),
    /// Structure of the QCNN on a given number of qubits.
    Describe(DescribeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Corr,
    Uncorr,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SingleModeArg {
    Corr,
    Uncorr,
}

#[derive(Debug, Args, Serialize)]
pub struct VarianceArgs {
    /// Comma-separated qubit counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub qubits: Vec<usize>,
    #[arg(long, value_enum, default_value = "uncorr")]
    pub mode: ModeArg,
    /// Samples per repetition.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 16)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fill the bound_F column.
    #[arg(long)]
    pub with_bound: bool,
    /// Largest statevector length allowed.
    #[arg(long, requires = "allow_large_state")]
    pub amplitude_cap: Option<u128>,
    /// Acknowledges that a raised --amplitude-cap may use a lot of memory.
    #[arg(long)]
    pub allow_large_state: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositionArg {
    First,
    SecondEdge,
    SecondInner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseArg {
    Auto,
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundArgs {
    #[arg(long)]
    pub qubits: usize,
    /// Layer of the differentiated block counted from the output; defaults
    /// to the widest layer.
    #[arg(long)]
    pub layer: Option<usize>,
    #[arg(long, value_enum, default_value = "first")]
    pub position: PositionArg,
    #[arg(long, value_enum, default_value = "auto")]
    pub case: CaseArg,
    /// Block index inside its sub-layer, used by `--case auto`; defaults to
    /// the centre block.
    #[arg(long)]
    pub block: Option<usize>,
    /// Number of middle modules for `--case 3`.
    #[arg(long, default_value_t = 1)]
    pub middle_modules: usize,
    #[arg(long, default_value = "4")]
    pub eps_o: String,
    #[arg(long, default_value = "3/4")]
    pub eps_sigma: String,
    #[arg(long, default_value = "1")]
    pub trace_h2: String,
    /// Use flagged table entries as printed.
    #[arg(long)]
    pub include_flagged: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum VerifyTarget {
    /// First and second moments of Haar unitaries.
    Weingarten(WeingartenArgs),
    /// Coefficient of the centre module.
    ModuleCenter(ModuleArgs),
    /// Print the recursion tables with flagged entries marked.
    Tables(TablesArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct WeingartenArgs {
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest allowed absolute deviation.
    #[arg(long, default_value_t = 5e-3)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ModuleArgs {
    #[arg(long, default_value_t = 200_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest allowed relative error.
    #[arg(long, default_value_t = 0.01)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TablesArgs {
    /// Number of generic rows of each family to print.
    #[arg(long, default_value_t = 3)]
    pub k_max: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PoolingArgs {
    #[arg(long, default_value_t = 10)]
    pub depth_max: usize,
    #[arg(long, value_enum, default_value = "corr")]
    pub mode: SingleModeArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DescribeArgs {
    #[arg(long)]
    pub qubits: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
