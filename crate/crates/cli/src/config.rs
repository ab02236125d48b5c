//! Command-line arguments and the resolved run configuration written next
//! to every command's outputs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "docforge", version, about = "Detect character-level forgeries in document images")]
pub struct Cli {
    /// Replay a resolved config file written by an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed for every random stream of the run [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory [default: out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Render clean statement pages with their character boxes (fixture input for synth).
    Render(RenderArgs),
    /// Build a manipulated corpus from clean pages.
    Synth(SynthArgs),
    /// Write TSV box files for a rendered corpus from its ink components.
    Ocr(OcrArgs),
    /// Turn a corpus plus TSV files into labelled feature matrices.
    Extract(ExtractArgs),
    /// Train a random forest on a feature matrix.
    Train(TrainArgs),
    /// Random hyper-parameter search with stratified cross-validation.
    Search(SearchArgs),
    /// Score a model or a predictions file and print the metric table.
    Evaluate(EvaluateArgs),
    /// Fit and search the moment-outlier baseline detector.
    Baseline(BaselineArgs),
    /// Draw predicted and true manipulations over a page image.
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Render(_) => "render",
            Command::Synth(_) => "synth",
            Command::Ocr(_) => "ocr",
            Command::Extract(_) => "extract",
            Command::Train(_) => "train",
            Command::Search(_) => "search",
            Command::Evaluate(_) => "evaluate",
            Command::Baseline(_) => "baseline",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RenderArgs {
    /// Number of pages.
    #[arg(long, default_value_t = 30)]
    pub pages: usize,
    /// Index of the first page.
    #[arg(long, default_value_t = 0)]
    pub first: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecKind {
    Shift,
    Scale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Axis4,
    VerticalOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMode {
    Both,
    Enlarge,
    Shrink,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    /// JSON list of clean pages: image path plus character boxes.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub spec: SpecKind,
    /// Magnitude bounds: pixels for shift, relative change for scale.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub range: Vec<f64>,
    /// Per-character manipulation probability.
    #[arg(long, default_value_t = 0.05)]
    pub prob: f64,
    #[arg(long, value_enum, default_value_t = Direction::Axis4)]
    pub direction: Direction,
    #[arg(long, value_enum, default_value_t = ScaleMode::Both)]
    pub scale_mode: ScaleMode,
    /// Fraction of pages held out as the test split.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct OcrArgs {
    /// Corpus directory written by `synth`.
    #[arg(long)]
    pub corpus: PathBuf,
    /// The clean-page list given to `synth`, used for character labels.
    #[arg(long)]
    pub sources: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitChoice {
    Train,
    Test,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixFormat {
    Csv,
    Bin,
}

impl MatrixFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MatrixFormat::Csv => "csv",
            MatrixFormat::Bin => "dfmx",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ExtractArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Directory holding `<split>/pageNNNN.tsv` (default: the corpus).
    #[arg(long)]
    pub tsv: Option<PathBuf>,
    /// Neighbours per side; repeat for several matrices.
    #[arg(long = "n", default_values_t = [3])]
    pub n: Vec<usize>,
    #[arg(long, value_enum, default_value_t = SplitChoice::All)]
    pub split: SplitChoice,
    #[arg(long, value_enum, default_value_t = MatrixFormat::Csv)]
    pub format: MatrixFormat,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    #[arg(long, default_value_t = 20)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 4)]
    pub min_samples_leaf: usize,
    /// Weight classes inversely to their frequency.
    #[arg(long)]
    pub balanced: bool,
    /// Also write the model as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SearchArgs {
    /// Feature matrices, one per neighbour count, with identical rows.
    #[arg(long, required = true)]
    pub features: Vec<PathBuf>,
    #[arg(long, default_value_t = 480)]
    pub iterations: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// JSON grid; the default grid is limited to the supplied neighbour counts.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Train the best candidate on all rows and save it.
    #[arg(long)]
    pub train_best: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    #[arg(long, requires = "features", conflicts_with = "predictions")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// CSV with `label` and `prediction` columns.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    Exhaustive,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineRule {
    Or,
    And,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BaselineArgs {
    /// Matrix used for fitting and the parameter search.
    #[arg(long)]
    pub train: PathBuf,
    /// Matrix flagged with the best parameters.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = BaselineMode::Exhaustive)]
    pub mode: BaselineMode,
    /// Draws for random mode.
    #[arg(long, default_value_t = 480)]
    pub iterations: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, value_enum, default_value_t = CombineRule::Or)]
    pub combine: CombineRule,
    /// Add line alignment and inertia angle to the Mahalanobis features.
    #[arg(long)]
    pub extended_w: bool,
    /// Fixed parameters as JSON; skips the search.
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub tsv: PathBuf,
    /// Ground-truth records; boxes of this page are outlined.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Page index (default: digits of the image file name, else 0).
    #[arg(long)]
    pub page_index: Option<usize>,
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub tool_version: String,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub out: PathBuf,
    pub command: Command,
}

impl RunConfig {
    /// Merges global flags with a replayed config; flags win.
    pub fn resolve(cli: Cli) -> anyhow::Result<Self> {
        let base = match (&cli.config, cli.command) {
            (Some(_), Some(_)) => bail!("--config replays a whole run; do not combine it with a subcommand"),
            (None, None) => bail!("no subcommand given (see --help)"),
            (Some(path), None) => Self::load(path)?,
            (None, Some(command)) => RunConfig {
                tool_version: env!("CARGO_PKG_VERSION").to_owned(),
                seed: 0,
                jobs: None,
                out: PathBuf::from("out"),
                command,
            },
        };
        Ok(RunConfig {
            seed: cli.seed.unwrap_or(base.seed),
            jobs: cli.jobs.or(base.jobs),
            out: cli.out.unwrap_or(base.out),
            ..base
        })
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Path of the resolved config inside the output directory.
    pub fn record_path(&self) -> PathBuf {
        self.out.join(format!("config.{}.json", self.command.name()))
    }
}
