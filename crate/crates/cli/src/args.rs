use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use framesel_core::aggregate::Aggregation;
use framesel_core::scoring::{BorderMode, ScoreMethod};
use framesel_core::selection::{Scenario, Strategy};

use crate::config::RegionSize;

#[derive(Parser, Debug)]
#[command(
    name = "framesel",
    version,
    about = "Frame selection for active learning of pedestrian detectors"
)]
pub struct Cli {
    /// JSON engine configuration; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Score probability stacks and aggregate them into image-level scores.
    Score(ScoreCmd),
    /// Aggregate dumped score maps into image-level scores.
    Aggregate(AggregateCmd),
    /// Select frames from a score table (one cycle, no pool state).
    Select(SelectCmd),
    /// Active-learning cycles over a persistent pool.
    #[command(subcommand)]
    Cycle(CycleCmd),
    /// Estimate time-to-completion of an active-learning schedule.
    Ttc(TtcCmd),
    /// Run the synthetic benchmark.
    Simulate(SimulateCmd),
    /// Per-cycle statistics of the labeled set.
    Report(ReportCmd),
    /// Write a synthetic world as stacks plus manifest.
    Generate(GenerateCmd),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Proposed,
    Entropy,
    McDropout,
}

impl From<MethodArg> for ScoreMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Proposed => ScoreMethod::Proposed,
            MethodArg::Entropy => ScoreMethod::Entropy,
            MethodArg::McDropout => ScoreMethod::McDropout,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BorderArg {
    Actual,
    Fixed,
}

impl From<BorderArg> for BorderMode {
    fn from(b: BorderArg) -> Self {
        match b {
            BorderArg::Actual => BorderMode::ActualCount,
            BorderArg::Fixed => BorderMode::FixedDenominator,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregateArg {
    MaxpoolMean,
    Mean,
}

impl From<AggregateArg> for Aggregation {
    fn from(a: AggregateArg) -> Self {
        match a {
            AggregateArg::MaxpoolMean => Aggregation::MaxpoolMean,
            AggregateArg::Mean => Aggregation::Mean,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyArg {
    Proposed,
    Entropy,
    McDropout,
    GuidedRandom,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Proposed => Strategy::Proposed,
            StrategyArg::Entropy => Strategy::Entropy,
            StrategyArg::McDropout => Strategy::McDropout,
            StrategyArg::GuidedRandom => Strategy::GuidedRandom,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioArg {
    Still,
    Video,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Still => Scenario::Still,
            ScenarioArg::Video => Scenario::Video,
        }
    }
}

#[derive(Args, Debug, Default)]
pub struct ScoreOpts {
    /// Uncertainty score.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Spatial radius r of the (2r+1)^2 window.
    #[arg(long)]
    pub radius: Option<usize>,
    /// Normalisation of windows clipped by the image border.
    #[arg(long, value_enum)]
    pub border: Option<BorderArg>,
    /// Average each map with its horizontal mirror before scoring.
    #[arg(long)]
    pub mirror: bool,
    #[command(flatten)]
    pub aggregation: AggregationOpts,
    /// Scoring threads; defaults to all cores.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct AggregationOpts {
    /// Max-pool region as WxH (or a single number for squares).
    #[arg(long, value_name = "WxH")]
    pub region_size: Option<RegionSize>,
    #[arg(long, value_enum)]
    pub aggregate: Option<AggregateArg>,
}

#[derive(Args, Debug, Default)]
pub struct TemporalOpts {
    /// Half-width of the Gaussian smoothing window, in frames.
    #[arg(long)]
    pub smooth_window: Option<u32>,
    #[arg(long)]
    pub smooth_sigma: Option<f64>,
    #[arg(long)]
    pub no_smoothing: bool,
    /// Exclusion radius around frames selected in the current cycle.
    #[arg(long)]
    pub dt1: Option<u32>,
    /// Exclusion radius around frames selected in any cycle.
    #[arg(long)]
    pub dt2: Option<u32>,
    #[arg(long)]
    pub no_temporal_rules: bool,
}

#[derive(Args, Debug, Default)]
pub struct BudgetOpts {
    /// Frames selected per cycle.
    #[arg(long = "b", value_name = "N")]
    pub cycle_budget: Option<usize>,
    /// Total labeling budget; must be a multiple of --b.
    #[arg(long = "B", value_name = "N")]
    pub total_budget: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ScoreCmd {
    /// Manifest listing the frames and their stacks.
    #[arg(long, required_unless_present = "stack", conflicts_with = "stack")]
    pub manifest: Option<PathBuf>,
    /// Individual `.alpm` stacks; the frame id is the file stem.
    #[arg(long, num_args = 1..)]
    pub stack: Vec<PathBuf>,
    #[command(flatten)]
    pub score: ScoreOpts,
    /// Write each pixel score map as a single-branch `.alpm` into this directory.
    #[arg(long, value_name = "DIR")]
    pub dump_maps: Option<PathBuf>,
    /// Output table (CSV, or JSON when the extension is .json); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AggregateCmd {
    /// Single-branch score maps as written by `score --dump-maps`.
    #[arg(required = true)]
    pub maps: Vec<PathBuf>,
    /// Factor undoing the normalisation of the dumped maps.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[command(flatten)]
    pub aggregation: AggregationOpts,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SelectCmd {
    /// Score table with columns frame_id, video_id, temporal_index, score.
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long = "b", value_name = "N")]
    pub cycle_budget: Option<usize>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    /// Defaults to video when every row has a video position.
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub temporal: TemporalOpts,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum CycleCmd {
    /// Run the next cycle: score, select, update the pool, write the training manifest.
    Run(CycleRunCmd),
}

#[derive(Args, Debug)]
pub struct CycleRunCmd {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Pool state file; created on the first cycle.
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,
    #[command(flatten)]
    pub budget: BudgetOpts,
    /// Seed of a new pool; must match the stored seed when given for an existing pool.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Precomputed image scores instead of scoring the manifest stacks.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[command(flatten)]
    pub score: ScoreOpts,
    #[command(flatten)]
    pub temporal: TemporalOpts,
    /// Training manifest path; defaults to `training_cycle_<k>.json` beside the pool.
    #[arg(long)]
    pub training_manifest: Option<PathBuf>,
    /// Block until this file exists (retraining finished).
    #[arg(long, value_name = "FILE")]
    pub wait_for: Option<PathBuf>,
    /// Give up waiting after this many seconds.
    #[arg(long, value_name = "SECS", requires = "wait_for")]
    pub wait_timeout: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TtcCmd {
    /// Size of the initial unlabeled pool.
    #[arg(long = "N", value_name = "N")]
    pub pool_size: usize,
    #[command(flatten)]
    pub budget: BudgetOpts,
    #[arg(long)]
    pub epochs: Option<u32>,
    /// Seconds per forward pass.
    #[arg(long)]
    pub t_forward: Option<f64>,
    /// Seconds per forward+backward pass.
    #[arg(long)]
    pub t_forward_backward: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateCmd {
    /// World configuration (JSON); built-in default world when absent.
    #[arg(long)]
    pub world_config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    /// Also run this strategy on the same seeds and test for a difference.
    #[arg(long, value_enum)]
    pub baseline: Option<StrategyArg>,
    /// Number of paired runs.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// First run seed; runs use seed, seed+1, ...
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub budget: BudgetOpts,
    #[arg(long, value_enum)]
    pub aggregate: Option<AggregateArg>,
    #[command(flatten)]
    pub temporal: TemporalOpts,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportCmd {
    #[arg(long)]
    pub pool: PathBuf,
    /// Defaults to the manifest recorded in the pool.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Count every annotation instead of filtering small or oddly shaped boxes.
    #[arg(long)]
    pub no_filter: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenerateCmd {
    #[arg(long)]
    pub world_config: Option<PathBuf>,
    /// Clusters the surrogate detector already knows; defaults to the world's.
    #[arg(long, value_delimiter = ',')]
    pub covered: Option<Vec<usize>>,
    /// Seed of the surrogate detector noise.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}
