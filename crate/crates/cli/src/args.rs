use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "pwspd", version, about = "Power-weighted shortest path distances and experiments")]
pub struct Cli {
    /// Worker threads. Output does not depend on this value.
    #[arg(long, global = true, env = "PWSPD_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pairwise distance matrix of a point cloud.
    Dist(DistArgs),
    /// Affinity matrix of a point cloud.
    Kernel(KernelArgs),
    /// Success rates of kNN graphs as 1-spanners over an (n, k) grid.
    SpannerHeatmap(HeatmapArgs),
    /// Fluctuation exponent estimate from path-length variances.
    Chi(ChiArgs),
    /// Spectral clustering accuracy as a function of p.
    ClusterSweep(SweepArgs),
    /// Writes a synthetic point cloud.
    GenData(GenArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Dist(_) => "dist",
            Command::Kernel(_) => "kernel",
            Command::SpannerHeatmap(_) => "spanner-heatmap",
            Command::Chi(_) => "chi",
            Command::ClusterSweep(_) => "cluster-sweep",
            Command::GenData(_) => "gen-data",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

/// Where the result goes and in which form. Not part of the run record.
#[derive(Debug, Args)]
pub struct Output {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args, Serialize)]
pub struct InputCloud {
    /// CSV point cloud, one point per row.
    #[arg(long)]
    pub input: PathBuf,

    /// The last column of the input holds integer labels.
    #[arg(long)]
    pub labels: bool,

    /// Intrinsic dimension; defaults to the number of columns.
    #[arg(long)]
    pub d: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
#[group(id = "graph", required = true, multiple = false)]
pub struct GraphChoice {
    /// Symmetric kNN graph with this many neighbors.
    #[arg(long, group = "graph")]
    pub k: Option<usize>,

    /// Complete graph.
    #[arg(long, group = "graph")]
    pub complete: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct DistArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputCloud,

    /// Path exponent; `inf` gives longest-leg distances.
    #[arg(long)]
    pub p: String,

    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphChoice,

    /// Multiply by n^((p-1)/(p d)).
    #[arg(long)]
    pub normalize: bool,

    /// Accept 0 < p < 1, where only the p-th power is a metric.
    #[arg(long)]
    pub non_metric: bool,

    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Gaussian,
    SelfTuning,
    Diffusion,
    PwspdGaussian,
}

#[derive(Debug, Args, Serialize)]
pub struct KernelArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputCloud,

    #[arg(long, value_enum)]
    pub kind: KernelKind,

    /// Scale as a percentile of the pairwise distances.
    #[arg(long, default_value_t = 15.0)]
    pub epsilon_percentile: f64,

    /// Explicit scale; overrides the percentile.
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Neighbor rank of the self-tuning scales.
    #[arg(long, default_value_t = 10)]
    pub k: usize,

    /// Density normalization exponent of the diffusion kernel.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,

    /// Path exponent of the pwspd-gaussian kernel.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,

    /// Profile exponent a in exp(-x^(2a)).
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,

    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub d: usize,

    #[arg(long)]
    pub p: f64,

    /// uniform-cube, sphere or gaussian.
    #[arg(long, default_value = "uniform-cube")]
    pub dist: String,

    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_grid: Vec<usize>,

    /// Comma-separated neighbor counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k_grid: Vec<usize>,

    #[arg(long, default_value_t = 20)]
    pub trials: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = pwspd_core::spanner::DEFAULT_TOLERANCE)]
    pub tolerance: f64,

    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct ChiArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,

    #[arg(long, default_value_t = 2.0)]
    pub p: f64,

    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,

    #[arg(long, default_value_t = pwspd_core::experiments::chi::DEFAULT_TRIALS)]
    pub trials: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,

    /// Use the large sample sizes (11586 to 92682). Slow.
    #[arg(long, conflicts_with = "n_grid")]
    pub full_scale: bool,

    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// two-rings, long-bottleneck, short-bottleneck or a labeled CSV file.
    #[arg(long)]
    pub dataset: String,

    /// `start:step:stop` or a comma-separated list.
    #[arg(long, default_value = "1:0.2:8")]
    pub p_grid: String,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// symmetric, random-walk or unnormalized.
    #[arg(long, default_value = "symmetric")]
    pub laplacian: String,

    #[arg(long, default_value_t = 15.0)]
    pub epsilon_percentile: f64,

    /// Neighbor rank of the self-tuning baseline.
    #[arg(long, default_value_t = 10)]
    pub st_k: usize,

    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    /// two-rings, long-bottleneck, short-bottleneck, uniform-cube, sphere or gaussian.
    #[arg(long)]
    pub name: String,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Sample size of the sampled distributions.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,

    /// Intrinsic dimension of the sampled distributions.
    #[arg(long, default_value_t = 2)]
    pub d: usize,

    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}
