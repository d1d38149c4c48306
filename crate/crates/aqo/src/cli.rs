//! Command-line arguments. Every flag can also be set through an `AQO_*`
//! environment variable, and every argument set serializes into the config
//! echo written next to the results.

use std::path::PathBuf;

use aqo_core::evolution::Method;
use aqo_core::partition::DEFAULT_K;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "aqo", version, about = "Adiabatic quantum optimization of the set partition problem")]
pub struct Cli {
    /// Directory receiving all output files.
    #[arg(long, global = true, env = "AQO_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads for independent instances or T points.
    #[arg(long, global = true, env = "AQO_JOBS", default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate a random instance file.
    Gen(GenArgs),
    /// Run one adiabatic evolution.
    Evolve(EvolveArgs),
    /// Minimize the complexity over the run time T for one instance.
    SweepT(SweepTArgs),
    /// Minimal complexity over many instances and sizes, with the exponential fit.
    SweepN(SweepNArgs),
    /// Low-lying adiabatic spectrum and minimum gap (n <= 12).
    Spectrum(SpectrumArgs),
    /// Coarse-grained density of states and resonance scan.
    Dos(DosArgs),
    /// Exact minimum residue and cost-level table by enumeration.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Split,
    Rk4,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Split => Method::SplitStep,
            MethodArg::Rk4 => Method::Rk4,
        }
    }
}

/// Either an instance file or `(n, b, seed)` to generate one.
#[derive(Debug, Clone, Args, Serialize)]
pub struct InstanceArgs {
    /// Instance JSON file; overrides --n/--b/--seed.
    #[arg(long, env = "AQO_INSTANCE")]
    pub instance: Option<PathBuf>,
    #[arg(long, env = "AQO_N")]
    pub n: Option<usize>,
    /// Bits of precision of the alpha_j.
    #[arg(long, env = "AQO_B", default_value_t = 25)]
    pub b: u32,
    #[arg(long, env = "AQO_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Ground-window multiplier in Delta = sqrt(n) 2^-n K.
    #[arg(long = "K", env = "AQO_K", default_value_t = DEFAULT_K)]
    pub k_multiplier: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IntegratorArgs {
    /// Time step; defaults to min(0.01, 0.1 / energy scale).
    #[arg(long, env = "AQO_DT")]
    pub dt: Option<f64>,
    #[arg(long, value_enum, env = "AQO_METHOD", default_value = "split")]
    pub method: MethodArg,
    /// Energy shift added to the problem Hamiltonian.
    #[arg(long, env = "AQO_SHIFT", default_value_t = 0.0, allow_hyphen_values = true)]
    pub shift: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, env = "AQO_N")]
    pub n: usize,
    #[arg(long, env = "AQO_B", default_value_t = 25)]
    pub b: u32,
    #[arg(long, env = "AQO_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output file; defaults to <out-dir>/instance.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub integrator: IntegratorArgs,
    /// Run time.
    #[arg(long = "T", env = "AQO_T")]
    pub duration: f64,
    /// Times at which to record the probability profile.
    #[arg(long, value_delimiter = ',')]
    pub snapshot_at: Vec<f64>,
    /// Write the final state to state.bin.
    #[arg(long)]
    pub checkpoint: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepTArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub integrator: IntegratorArgs,
    /// Defaults to 0.25.
    #[arg(long, env = "AQO_T_MIN")]
    pub t_min: Option<f64>,
    /// Defaults to 20 * 2^(0.4 n).
    #[arg(long, env = "AQO_T_MAX")]
    pub t_max: Option<f64>,
    #[arg(long, default_value_t = 16)]
    pub grid_points: usize,
    /// Maximum number of propagations.
    #[arg(long, default_value_t = 64)]
    pub budget: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepNArgs {
    #[arg(long, env = "AQO_N_MIN")]
    pub n_min: usize,
    #[arg(long, env = "AQO_N_MAX")]
    pub n_max: usize,
    #[arg(long, env = "AQO_INSTANCES", default_value_t = 11)]
    pub instances: usize,
    #[arg(long, env = "AQO_B", default_value_t = 25)]
    pub b: u32,
    /// Base seed; per-instance seeds are derived from it.
    #[arg(long, env = "AQO_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "K", env = "AQO_K", default_value_t = DEFAULT_K)]
    pub k_multiplier: f64,
    #[arg(long, env = "AQO_DT")]
    pub dt: Option<f64>,
    #[arg(long, value_enum, env = "AQO_METHOD", default_value = "split")]
    pub method: MethodArg,
    /// Smallest n in the fit; defaults to --n-min.
    #[arg(long)]
    pub fit_min: Option<usize>,
    /// Largest n in the fit; defaults to --n-max.
    #[arg(long)]
    pub fit_max: Option<usize>,
    /// Fixed T range for every n instead of the size-dependent default.
    #[arg(long, env = "AQO_T_MIN")]
    pub t_min: Option<f64>,
    #[arg(long, env = "AQO_T_MAX")]
    pub t_max: Option<f64>,
    #[arg(long, default_value_t = 16)]
    pub grid_points: usize,
    #[arg(long, default_value_t = 64)]
    pub budget: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, env = "AQO_S_POINTS", default_value_t = aqo_core::spectral::DEFAULT_S_POINTS)]
    pub s_points: usize,
    /// Number of low-lying levels.
    #[arg(long, env = "AQO_LEVELS", default_value_t = 8)]
    pub levels: usize,
    #[arg(long, env = "AQO_SHIFT", default_value_t = 0.0, allow_hyphen_values = true)]
    pub shift: f64,
    /// Subdivisions added around the gap minimum; 0 disables refinement.
    #[arg(long, default_value_t = aqo_core::spectral::DEFAULT_REFINEMENT)]
    pub refine: usize,
    /// Run time for the adiabaticity parameter.
    #[arg(long = "T", env = "AQO_T")]
    pub duration: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DosArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Histogram window; defaults to 1000 sqrt(n) 2^-n clamped to the legal range.
    #[arg(long, env = "AQO_WINDOW")]
    pub window: Option<f64>,
    /// Candidate approximate common divisors to scan.
    #[arg(long, value_delimiter = ',')]
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OracleArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
}
