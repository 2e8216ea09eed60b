use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "prerank", version, about = "Partial top-k re-ranking of object proposals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fill every candidate's IoU label from the groundtruth.
    Label(LabelArgs),
    /// Attach HOG descriptors computed from PGM images.
    Featurize(FeaturizeArgs),
    /// Train a ranking model.
    Train(TrainArgs),
    /// Reorder candidates by model score.
    Rerank(RerankArgs),
    /// Compare ingestion order against a re-ranked dataset.
    Eval(EvalArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Re-render a saved evaluation report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    /// Input dataset (JSON Lines).
    #[arg(long, short)]
    pub input: PathBuf,
    /// Output dataset path.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Directory holding `<image_id>.pgm` files.
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Leave records whose candidates already carry features untouched.
    #[arg(long)]
    pub keep_existing: bool,
    #[arg(long, default_value_t = 50)]
    pub resize_w: usize,
    #[arg(long, default_value_t = 60)]
    pub resize_h: usize,
    #[arg(long, default_value_t = 8)]
    pub cell_size: usize,
    #[arg(long, default_value_t = 9)]
    pub orientation_bins: usize,
    #[arg(long, default_value_t = 0.2)]
    pub clip_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MarginArg {
    Soft,
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    Partial,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SlackArg {
    Shared,
    PerConstraint,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled, featurized dataset.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Model output path (JSON).
    #[arg(long, short)]
    pub out: PathBuf,
    /// Number of top-ranked candidates treated as positives.
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    /// Slack penalty.
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, value_enum, default_value_t = MarginArg::Soft)]
    pub mode: MarginArg,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    /// Recorded in the model; the solver itself is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `partial` trains the top-k model, `full` the all-pairs baseline.
    #[arg(long, value_enum, default_value_t = BaselineArg::Partial)]
    pub baseline: BaselineArg,
    #[arg(long, value_enum, default_value_t = SlackArg::Shared)]
    pub slack: SlackArg,
    /// Initial step size (default 1 / (C N), or 1 / hard-C in hard mode).
    #[arg(long)]
    pub step_size: Option<f64>,
    #[arg(long, default_value_t = 1e-2)]
    pub decay: f64,
    /// C used by hard mode.
    #[arg(long, default_value_t = 1e6)]
    pub hard_c: f64,
    /// Print the objective every this many epochs (0 prints only the last).
    #[arg(long, default_value_t = 10)]
    pub log_every: usize,
}

#[derive(Debug, Args)]
pub struct RerankArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub model: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CoverageArg {
    /// Best overlap must exceed the threshold.
    Strict,
    /// Best overlap may equal the threshold.
    Inclusive,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Dataset in ingestion order.
    #[arg(long)]
    pub original: PathBuf,
    /// The same images after `rerank`.
    #[arg(long)]
    pub reranked: PathBuf,
    /// Comma-separated IoU thresholds.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.7,0.9")]
    pub deltas: Vec<f64>,
    /// Comma-separated proposal budgets.
    #[arg(long, value_delimiter = ',', default_value = "1,10,50,100,200,500,800,1000")]
    pub budgets: Vec<usize>,
    #[arg(long, value_enum, default_value_t = CoverageArg::Strict)]
    pub coverage: CoverageArg,
    /// Output prefix; writes PREFIX.csv, PREFIX.txt and PREFIX.json.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value = "ingestion")]
    pub original_name: String,
    #[arg(long, default_value = "reranked")]
    pub reranked_name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthModeArg {
    FeatureOnly,
    Geometric,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = SynthModeArg::FeatureOnly)]
    pub mode: SynthModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub num_images: usize,
    #[arg(long, default_value_t = 100)]
    pub candidates: usize,
    #[arg(long, default_value_t = 16)]
    pub feature_dim: usize,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    /// Comma-separated planted weight (feature_only mode).
    #[arg(long, value_delimiter = ',')]
    pub planted_weight: Option<Vec<f64>>,
    #[arg(long, default_value_t = 500)]
    pub image_width: u32,
    #[arg(long, default_value_t = 400)]
    pub image_height: u32,
    #[arg(long, default_value_t = 1)]
    pub min_objects: usize,
    #[arg(long, default_value_t = 3)]
    pub max_objects: usize,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    /// Jittered copies generated per groundtruth object.
    #[arg(long, default_value_t = 8)]
    pub copies: usize,
    #[arg(long, default_value_t = 0.2)]
    pub jitter: f64,
    /// Dataset output path; metadata goes next to it as `*.meta.json`.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Csv,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// JSON report written by `eval`.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    pub format: FormatArg,
    /// Write here instead of standard output.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}
