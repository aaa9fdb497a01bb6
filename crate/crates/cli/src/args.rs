use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tensoranom::scoring::ScoreMethod;
use tensoranom::solver::Variant;

#[derive(Parser, Debug)]
#[command(name = "tensoranom", version, about = "Low-rank plus smooth sparse tensor anomaly detection")]
pub struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a labeled synthetic dataset.
    Synth(SynthArgs),
    /// Turn a multivariate time-series CSV into a tensor.
    Ingest(IngestArgs),
    /// Split a tensor into low-rank and sparse parts.
    Decompose(DecomposeArgs),
    /// Score the sparse part of a decomposition.
    Score(ScoreArgs),
    /// Compare scores or flags against labels and events.
    Eval(EvalArgs),
    /// Random search over the regularization weights.
    Tune(TuneArgs),
    /// Sweep one synthetic-data parameter across variants and seeds.
    Bench(BenchArgs),
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected RxC, got `{s}`"))?;
    let r = r.trim().parse().map_err(|e| format!("grid rows: {e}"))?;
    let c = c.trim().parse().map_err(|e| format!("grid cols: {e}"))?;
    Ok((r, c))
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: tensoranom::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<ScoreMethod, String> {
    match s.to_ascii_lowercase().as_str() {
        "nll" => Ok(ScoreMethod::Nll),
        "abs" => Ok(ScoreMethod::Abs),
        _ => Err(format!("unknown score method `{s}` (nll or abs)")),
    }
}

/// Spatial graph: a grid or an edge-list file.
#[derive(Args, Debug, Clone, Default)]
pub struct GraphArgs {
    /// Grid graph with R rows and C columns (default 8x5).
    #[arg(long, value_parser = parse_grid, conflicts_with = "graph")]
    pub grid: Option<(usize, usize)>,
    /// Edge-list CSV with a `# nodes=<n>` header.
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

/// 1-based mode designations.
#[derive(Args, Debug, Clone, Default)]
pub struct ModeArgs {
    /// Location mode (1-based, default 1).
    #[arg(long)]
    pub location_mode: Option<usize>,
    /// Time mode (1-based, default the last mode).
    #[arg(long)]
    pub time_mode: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SolverArgs {
    /// lr-stss, lr-ts, lr-ss or horpca.
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda_l: Option<f64>,
    #[arg(long)]
    pub lambda_t: Option<f64>,
    /// Nuclear-norm weights, one per mode (default 1 - lambda1 each).
    #[arg(long, value_delimiter = ',')]
    pub psi: Option<Vec<f64>>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Wrap-around time differences.
    #[arg(long)]
    pub cyclic: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ScoringArgs {
    /// nll or abs.
    #[arg(long, value_parser = parse_method)]
    pub method: Option<ScoreMethod>,
    #[arg(long)]
    pub k_hop: Option<usize>,
    /// Weight bandwidth (default: per-block median distance).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Flagged fraction.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub sigma_floor: Option<f64>,
    /// Mean and variance per time block instead of per location.
    #[arg(long)]
    pub block_local: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SynthParams {
    #[arg(long, value_delimiter = ',')]
    pub shape: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub rank: Option<Vec<usize>>,
    /// Location grid RxC.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,
    #[command(flatten)]
    pub modes: ModeArgs,
    /// Group hop radius.
    #[arg(long)]
    pub r: Option<usize>,
    /// Pulse duration.
    #[arg(long)]
    pub d: Option<usize>,
    /// Number of groups.
    #[arg(long)]
    pub g: Option<usize>,
    /// Pulse amplitude.
    #[arg(long)]
    pub c: Option<f64>,
    /// Signal-to-noise ratio in dB.
    #[arg(long)]
    pub snr: Option<f64>,
    /// Draw each group's sign at random.
    #[arg(long)]
    pub random_sign: bool,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[command(flatten)]
    pub params: SynthParams,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// CSV with one row per time step and one column per variate.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Within-period time hierarchy, e.g. 24,60.
    #[arg(long, value_delimiter = ',', required = true)]
    pub reshape: Vec<usize>,
    /// The first line is a header.
    #[arg(long)]
    pub header: bool,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    /// DTF1 data tensor.
    #[arg(short, long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub modes: ModeArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    /// DTF1 sparse part (s_hat.dtf).
    #[arg(short, long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub modes: ModeArgs,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// DTF1 scores.
    #[arg(long)]
    pub scores: PathBuf,
    /// DTF1 uint8 labels.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// DTF1 uint8 flags (default: threshold the scores at --alpha).
    #[arg(long)]
    pub flags: Option<PathBuf>,
    /// Score sidecar JSON written by `score`.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Flagged fraction when no flags are given.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Event list JSON.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Top-K percentages for event detection.
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,10")]
    pub topk: Vec<f64>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveKind {
    AucPlusF1,
    TopkEvents,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    /// DTF1 data tensor.
    #[arg(short, long)]
    pub input: PathBuf,
    /// DTF1 uint8 labels (objective auc-plus-f1).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Event list JSON (objective topk-events).
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Default: auc-plus-f1 with labels, topk-events with events.
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveKind>,
    #[arg(long, default_value_t = 1.0)]
    pub w_auc: f64,
    #[arg(long, default_value_t = 1.0)]
    pub w_f1: f64,
    #[arg(long, default_value_t = 3.0)]
    pub k_percent: f64,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub modes: ModeArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Radius,
    Duration,
    Groups,
    Amplitude,
    Snr,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Radius => "radius",
            SweepParam::Duration => "duration",
            SweepParam::Groups => "groups",
            SweepParam::Amplitude => "amplitude",
            SweepParam::Snr => "snr",
        }
    }
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub sweep: SweepParam,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    /// Number of seeds per value.
    #[arg(long, default_value_t = 10)]
    pub seeds: usize,
    /// First dataset seed; seed k of a sweep point is base + k.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Variants to run (default all four).
    #[arg(long, value_delimiter = ',', value_parser = parse_variant)]
    pub variants: Option<Vec<Variant>>,
    #[command(flatten)]
    pub synth: SynthParams,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}
