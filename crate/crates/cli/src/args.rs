use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use els_core::depth::Momentum;
use els_core::reference::StepRule;
use els_core::Algorithm;

#[derive(Parser, Debug)]
#[command(name = "els", version, about = "Least-squares regression on FV-encrypted data")]
pub struct Cli {
    /// TOML file whose keys mirror the command line flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads; defaults to ELS_WORKERS, then all cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fix a plan for a dataset and print the parameters it needs.
    Params(ParamsArgs),
    /// Generate FV keys for a plan.
    Keygen(KeygenArgs),
    /// Encode and encrypt a dataset.
    Encrypt(EncryptArgs),
    /// Run the planned algorithm on an encrypted dataset.
    Fit(FitArgs),
    /// Decrypt and decode coefficients or predictions.
    Decrypt(DecryptArgs),
    /// Encrypted fitted values from an encrypted dataset and fit.
    Predict(PredictArgs),
    /// Write a simulated dataset as CSV.
    Simulate(SimulateArgs),
    /// Error against OLS at fixed multiplicative depth.
    Benchmark(BenchmarkArgs),
    /// Bootstrap standard errors.
    Bootstrap(BootstrapArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Fv,
    Oracle,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Response column.
    #[arg(long, default_value = "y")]
    pub response: String,
}

pub fn parse_step(s: &str) -> Result<StepRule, String> {
    match s.split_once(':') {
        None if s == "optimal" => Ok(StepRule::Optimal),
        Some(("edge", m)) => m.parse().map(|m| StepRule::SpectralEdge { m }).map_err(|e| format!("{e}")),
        Some(("nu", n)) => n.parse().map(|nu| StepRule::Explicit { nu }).map_err(|e| format!("{e}")),
        _ => Err(format!("unknown step rule {s:?}; use optimal, edge:M or nu:N")),
    }
}

pub fn parse_momentum(s: &str) -> Result<Momentum, String> {
    match s.split_once(':') {
        None if s == "nesterov" => Ok(Momentum::Nesterov),
        None if s == "nesterov-positive" => Ok(Momentum::NesterovPositive),
        Some(("constant", v)) => Ok(Momentum::Constant(v.to_string())),
        Some(("schedule", v)) => Ok(Momentum::Schedule(v.split(',').map(str::to_string).collect())),
        _ => Err(format!(
            "unknown momentum {s:?}; use nesterov, nesterov-positive, constant:ETA or schedule:E1,E2,..."
        )),
    }
}

#[derive(Args, Debug)]
pub struct ParamsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "gd")]
    pub algorithm: Algorithm,
    /// Iterations; alternatively give --mmd.
    #[arg(long, conflicts_with = "mmd")]
    pub k: Option<u32>,
    /// Depth budget from which K is derived.
    #[arg(long)]
    pub mmd: Option<u32>,
    #[arg(long, default_value_t = 2)]
    pub phi: u32,
    /// optimal, edge:M or nu:N
    #[arg(long, default_value = "optimal", value_parser = parse_step)]
    pub step: StepRule,
    /// Ridge penalty as a decimal.
    #[arg(long, default_value = "0")]
    pub alpha: String,
    /// Reserve one level for encrypted predictions.
    #[arg(long)]
    pub predict: bool,
    #[arg(long, default_value = "nesterov", value_parser = parse_momentum)]
    pub momentum: Momentum,
    /// Where to write the plan (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct KeygenArgs {
    #[arg(long)]
    pub plan: PathBuf,
    /// Directory for params.bin, public.key, relin.key and secret.key.
    #[arg(long)]
    pub keys: PathBuf,
    #[arg(long, default_value = "els-keys")]
    pub seed: String,
}

#[derive(Args, Debug)]
pub struct EncryptArgs {
    #[arg(long)]
    pub plan: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "fv")]
    pub backend: BackendKind,
    #[arg(long)]
    pub keys: Option<PathBuf>,
    /// Seed for encryption randomness.
    #[arg(long, default_value = "els-encrypt")]
    pub seed: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    pub plan: PathBuf,
    /// Encrypted dataset artifact.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "fv")]
    pub backend: BackendKind,
    #[arg(long)]
    pub keys: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write encrypted fitted values when the plan reserves a level.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DecryptArgs {
    /// Coefficient or prediction artifact.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "fv")]
    pub backend: BackendKind,
    #[arg(long)]
    pub keys: Option<PathBuf>,
    /// Original CSV, to report coefficients in raw units.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Write the decoded values as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub fit: PathBuf,
    /// Encrypted dataset artifact whose rows are predicted.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "fv")]
    pub backend: BackendKind,
    #[arg(long)]
    pub keys: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub p: usize,
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Lagged AR(2) series instead of a Gaussian design.
    #[arg(long)]
    pub ar2: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [12u32, 24])]
    pub mmd: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_values_t = [Algorithm::Gd, Algorithm::Cd, Algorithm::GdVwt, Algorithm::Nag])]
    pub algorithms: Vec<Algorithm>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub p: usize,
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Number of simulated datasets, seeded 1..=N.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value_t = 2)]
    pub phi: u32,
    #[arg(long, default_value = "optimal", value_parser = parse_step)]
    pub step: StepRule,
    /// Run the integer circuits on the oracle backend instead of floats.
    #[arg(long)]
    pub encrypted: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BootstrapBackend {
    Float,
    Oracle,
}

#[derive(Args, Debug)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "gd")]
    pub algorithm: Algorithm,
    #[arg(long, default_value_t = 10)]
    pub k: u32,
    #[arg(long, default_value_t = 2)]
    pub phi: u32,
    #[arg(long, default_value = "optimal", value_parser = parse_step)]
    pub step: StepRule,
    #[arg(long, default_value_t = 50)]
    pub resamples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "oracle")]
    pub backend: BootstrapBackend,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
