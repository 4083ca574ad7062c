use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "concept-cover",
    version,
    about = "Concept recognition scoring and scene-level analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Greedy feature-map selection for every (image, concept) in a dataset.
    Localize(LocalizeArgs),
    /// Distribution, per-scene and per-concept statistics at one threshold pair.
    Analyze(AnalyzeArgs),
    /// Correlations over a grid of uniqueness and popularity thresholds.
    Sweep(SweepArgs),
    /// Write a synthetic dataset with planted recognition quality.
    GenSynth(GenSynthArgs),
    /// Summary statistics of a recognition results file.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct LocalizeArgs {
    /// Dataset directory or manifest file.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Minimum score gain for accepting another map.
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    #[arg(long)]
    pub max_maps: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Results directory or CSV written by `localize`.
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Uniqueness threshold.
    #[arg(long, default_value_t = 0.55)]
    pub alpha: f64,
    /// Popularity threshold.
    #[arg(long, default_value_t = 0.4)]
    pub beta: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// `lo:hi`, inclusive.
    #[arg(long, default_value = "0:1")]
    pub alpha_range: String,
    #[arg(long, default_value = "0:1")]
    pub beta_range: String,
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    /// 16 scenes x 50 images, 32x32, 64 maps, with planted unique and misleading concepts.
    Planted,
}

#[derive(Debug, Args)]
pub struct GenSynthArgs {
    /// JSON generator spec.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed of --spec or --preset.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the expected per-instance scores to `planted.csv`.
    #[arg(long)]
    pub write_expected: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub results: PathBuf,
}
