use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qkmeans::ann::AnnBackend;
use qkmeans::dataset::Format;
use qkmeans::seeding::Budget;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "qkmeans", version, about = "Fast k-means seeding and scaling-law experiments")]
pub struct Cli {
    /// Worker threads for data-parallel work (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Seed k centers on a dataset and write the result as JSON.
    Seed(SeedArgs),
    /// Time seeding algorithms across k values and seeds; writes CSV.
    Bench(BenchArgs),
    /// Fit β and η scaling laws over a list of k values.
    Scaling(ScalingArgs),
    /// Estimate intrinsic dimension with the k-NN MLE.
    Id(IdArgs),
    /// Run the built-in invariant checks.
    Validate(ValidateArgs),
    /// Write a synthetic dataset.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Qkmeans,
    Kmeanspp,
    Uniform,
    RhoDelta,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// File format; inferred from the extension when omitted.
    #[arg(long)]
    pub format: Option<Format>,
    /// Random projection distortion in (0, 0.25); off when omitted.
    #[arg(long)]
    pub jl_eps: Option<f64>,
    /// Noise-to-signal ratio of injected Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    pub nsr: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RejectArgs {
    /// Proposal budget multiplier, or `inf`.
    #[arg(long, default_value = "10")]
    #[serde(serialize_with = "ser_display")]
    pub m: Budget,
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    #[arg(long, default_value = "lsh")]
    pub ann: AnnBackend,
    /// Uniform mixing weight for the rho-delta reference.
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SeedArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "qkmeans")]
    pub algo: Algo,
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub reject: RejectArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    /// Comma-separated algorithms.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "qkmeans,kmeanspp")]
    pub algo: Vec<Algo>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub ks: Vec<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub reject: RejectArgs,
    /// Base seed; run r uses seed + r.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub runs: u64,
    /// CSV output; a `.summary.json` with mean and median times is written beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScalingArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub ks: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, default_value_t = 20)]
    pub lloyd_iters: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub lloyd_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IdArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long = "k-nn", value_delimiter = ',', default_value = "5,10,20,50,100")]
    pub k_nn: Vec<usize>,
    /// Rows per repeat; all rows when omitted or larger than the dataset.
    #[arg(long)]
    pub subsample: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON report destination; stdout only when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, hide = true)]
    pub break_oversampling: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    Cube,
    Sphere,
    Mixture,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "cube")]
    pub kind: GenKind,
    /// Intrinsic dimension (cube, sphere) or ignored (mixture).
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Ambient dimension.
    #[arg(long, default_value_t = 10)]
    pub dim: usize,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Mixture components.
    #[arg(long, default_value_t = 10)]
    pub components: usize,
    /// Standard deviation of the mixture means.
    #[arg(long, default_value_t = 4.0)]
    pub center_scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: PathBuf,
}

fn ser_display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}
