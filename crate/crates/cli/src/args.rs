use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use homodiff::graph::Delimiter;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "homodiff", version, about = "Infer node age groups by diffusion over a communication graph")]
pub struct Cli {
    /// Worker threads for diffusion and evaluation (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a planted-homophily graph with full and sampled label files.
    Synth(SynthArgs),
    /// Communication, surrogate and social-effect matrices.
    Homophily(HomophilyArgs),
    /// Split labels, diffuse, and assign categories.
    Infer(InferArgs),
    /// Score predictions overall and by SIN, DTS, degree and threshold.
    Evaluate(EvaluateArgs),
    /// homophily, infer and evaluate in one go.
    All(AllArgs),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelimiterArg {
    #[default]
    Comma,
    Tab,
    Space,
}

impl From<DelimiterArg> for Delimiter {
    fn from(d: DelimiterArg) -> Self {
        match d {
            DelimiterArg::Comma => Delimiter::Comma,
            DelimiterArg::Tab => Delimiter::Tab,
            DelimiterArg::Space => Delimiter::Space,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// Edge list, `src<delim>dst[<delim>weight]` per line.
    #[arg(long)]
    pub edges: PathBuf,

    /// Label file, `id<delim>age` per line.
    #[arg(long)]
    pub labels: PathBuf,

    #[arg(long, value_enum, default_value_t)]
    pub delimiter: DelimiterArg,

    /// Inclusive upper age bounds of every category but the last.
    #[arg(long, value_delimiter = ',', default_values_t = [24u32, 34, 50])]
    pub age_bounds: Vec<u32>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DiffusionArgs {
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,

    #[arg(long, default_value_t = 20)]
    pub max_iters: usize,

    /// Stop once the largest entry change between iterations drops below this.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,

    /// Hold seed rows fixed at their one-hot vectors.
    #[arg(long)]
    pub clamp_seeds: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SplitArgs {
    #[arg(long, default_value_t = 0.2)]
    pub val_fraction: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Hold out the same fraction of every category.
    #[arg(long)]
    pub stratified: bool,

    /// Reuse a split written by an earlier run instead of drawing one.
    #[arg(long)]
    pub split: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssignScope {
    /// Every node in the graph.
    #[default]
    All,
    /// Every node except the seeds.
    NonSeed,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AssignArgs {
    /// Match the ground-truth category distribution instead of plain argmax.
    #[arg(long)]
    pub constrained: bool,

    /// Nodes the constrained assignment covers.
    #[arg(long, value_enum, default_value_t)]
    pub assign_scope: AssignScope,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    #[default]
    Category,
    Year,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegreeBuckets {
    #[default]
    Log,
    Identity,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalScope {
    #[default]
    Validation,
    /// Every labeled node that is not a seed.
    NonSeed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingArg {
    PairScan,
    #[default]
    GeometricSkip,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    pub groups: usize,

    #[arg(long, default_value_t = 2500)]
    pub group_size: usize,

    /// Expected neighbors inside a node's own group.
    #[arg(long, default_value_t = 8.0)]
    pub intra_degree: f64,

    /// Expected neighbors in all other groups together.
    #[arg(long, default_value_t = 3.0)]
    pub inter_degree: f64,

    #[arg(long, default_value_t = 0.1)]
    pub labeled_fraction: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, value_enum, default_value_t)]
    pub sampling: SamplingArg,

    #[arg(long, value_enum, default_value_t)]
    pub delimiter: DelimiterArg,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HomophilyArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, value_enum, default_value_t)]
    pub granularity: Granularity,

    /// Added to both matrices before taking logs.
    #[arg(long, default_value_t = 0.0)]
    pub pseudocount: f64,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InferArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub diffusion: DiffusionArgs,

    #[command(flatten)]
    pub split: SplitArgs,

    #[command(flatten)]
    pub assign: AssignArgs,

    /// Continue from a state checkpoint instead of the initial state.
    #[arg(long)]
    pub resume: Option<PathBuf>,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long)]
    pub predictions: PathBuf,

    /// State checkpoint supplying confidences for the threshold curve.
    #[arg(long)]
    pub state: Option<PathBuf>,

    /// Split file naming the seeds and validation nodes.
    #[arg(long)]
    pub split: PathBuf,

    /// Confidence thresholds (default grid when a state is given).
    #[arg(long, value_delimiter = ',')]
    pub taus: Option<Vec<f64>>,

    #[arg(long, value_enum, default_value_t)]
    pub degree_buckets: DegreeBuckets,

    #[arg(long, value_enum, default_value_t)]
    pub scope: EvalScope,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AllArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub diffusion: DiffusionArgs,

    #[command(flatten)]
    pub split: SplitArgs,

    #[command(flatten)]
    pub assign: AssignArgs,

    #[arg(long, value_enum, default_value_t)]
    pub granularity: Granularity,

    #[arg(long, default_value_t = 0.0)]
    pub pseudocount: f64,

    #[arg(long, value_delimiter = ',')]
    pub taus: Option<Vec<f64>>,

    #[arg(long, value_enum, default_value_t)]
    pub degree_buckets: DegreeBuckets,

    #[arg(long, value_enum, default_value_t)]
    pub scope: EvalScope,

    #[arg(long)]
    pub out: PathBuf,
}
