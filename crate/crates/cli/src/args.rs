use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shapekit::corrupt::CorruptionKind;

/// Point-cloud tokenization, encoding, matching, box grounding, corruption
/// and answer-scoring tools.
///
/// Results go to stdout (JSON unless --format says otherwise), diagnostics to
/// stderr. Exit status: 0 success, 1 runtime error, 2 usage error.
#[derive(Debug, Parser)]
#[command(
    name = "shapekit",
    version,
    propagate_version = true,
    max_term_width = 100
)]
pub struct Cli {
    /// Seed for every random choice
    #[arg(long, global = true, default_value_t = 0, display_order = 900)]
    pub seed: u64,

    /// JSON object of flag defaults (snake_case keys); command-line flags win
    #[arg(long, global = true, value_name = "FILE", display_order = 900)]
    pub config: Option<PathBuf>,

    /// Write results to FILE instead of stdout
    #[arg(long, short, global = true, value_name = "FILE", display_order = 900)]
    pub output: Option<PathBuf>,

    /// Result format [default: json, or pcb for corrupt with a .pcb output]
    #[arg(long, global = true, value_enum, display_order = 900)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    #[value(alias = "md")]
    Markdown,
    Pcb,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Farthest-point seeds and their k-nearest-neighbor groups
    Tokenize(TokenizeArgs),
    /// Encoder forward pass; reports the assembled token sequence
    Encode(EncodeArgs),
    /// Optimal one-to-one matching of view features to query features
    Match(MatchArgs),
    /// Seeded corruption or augmentation of a point cloud
    Corrupt(CorruptArgs),
    /// IoU of oriented boxes, pairwise or one against many
    Iou(IouArgs),
    /// Grounding accuracy of predicted boxes at an IoU threshold
    Reg(RegArgs),
    /// Judge model answers and aggregate scores per capability
    Eval(EvalArgs),
    /// Re-render a saved evaluation report
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Tokenize(_) => "tokenize",
            Command::Encode(_) => "encode",
            Command::Match(_) => "match",
            Command::Corrupt(_) => "corrupt",
            Command::Iou(_) => "iou",
            Command::Reg(_) => "reg",
            Command::Eval(_) => "eval",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug, Args)]
pub struct TokenizeArgs {
    /// Point cloud (PCB1 or text)
    pub input: PathBuf,

    /// Number of seed points
    #[arg(long, default_value_t = 512)]
    pub n_seeds: usize,

    /// Neighbors per seed, the seed included
    #[arg(long, default_value_t = 32)]
    pub k: usize,

    /// Index of the first seed
    #[arg(long, default_value_t = 0)]
    pub start: usize,

    /// Center and scale the cloud into the unit sphere first
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MaskArg {
    None,
    Random,
    Causal,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Point cloud (PCB1 or text)
    pub input: PathBuf,

    /// Size preset: S, B, L or custom
    #[arg(long, default_value = "S")]
    pub variant: String,

    /// Transformer layers (custom only)
    #[arg(long)]
    pub layers: Option<usize>,

    /// Token width (custom only)
    #[arg(long)]
    pub hidden: Option<usize>,

    /// Feed-forward width (custom only)
    #[arg(long)]
    pub mlp: Option<usize>,

    /// Attention heads (custom only)
    #[arg(long)]
    pub heads: Option<usize>,

    /// Image queries; one text query is added
    #[arg(long, default_value_t = 4)]
    pub queries: usize,

    /// Drop the text query's output from the global features
    #[arg(long)]
    pub no_text_query: bool,

    /// Length of each prompt bank
    #[arg(long, default_value_t = 32)]
    pub prompt_length: usize,

    /// Projector output width
    #[arg(long, default_value_t = 4096)]
    pub d_llm: usize,

    /// Attention masking
    #[arg(long, value_enum, default_value_t = MaskArg::None)]
    pub mask: MaskArg,

    /// Fraction of tokens hidden by the random mask
    #[arg(long, default_value_t = shapekit::encoder::DEFAULT_MASK_RATIO)]
    pub mask_ratio: f64,

    /// Number of seed points
    #[arg(long, default_value_t = 512)]
    pub n_seeds: usize,

    /// Neighbors per seed
    #[arg(long, default_value_t = 32)]
    pub k: usize,

    /// Center and scale the cloud into the unit sphere first
    #[arg(long)]
    pub normalize: bool,

    /// Load weights from a WB01 file instead of generating them
    #[arg(long, value_name = "FILE")]
    pub weights: Option<PathBuf>,

    /// Save the weights used to a WB01 file
    #[arg(long, value_name = "FILE")]
    pub save_weights: Option<PathBuf>,

    /// Save the six output segments to a WB01 file
    #[arg(long, value_name = "FILE")]
    pub tensors: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    /// View features, one row per feature (text or WB01)
    pub views: PathBuf,

    /// Query features, same shape as the views
    pub queries: PathBuf,

    /// Tensor to read from WB01 inputs [default: the first]
    #[arg(long, value_name = "NAME")]
    pub tensor: Option<String>,
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    /// Point cloud (PCB1 or text)
    pub input: PathBuf,

    /// single_view, jitter, rotate or augment
    #[arg(long, value_parser = parse_kind)]
    pub kind: CorruptionKind,

    /// Jitter standard deviation
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,

    /// Euler angle bound in radians [default: pi/6]
    #[arg(long)]
    pub theta: Option<f64>,

    /// Single-view cone opening angle, degrees
    #[arg(long, default_value_t = 60.0)]
    pub fov: f64,

    /// Single-view depth-buffer cells per angular axis
    #[arg(long, default_value_t = 128)]
    pub bins: usize,

    /// Single-view camera distance from the origin
    #[arg(long, default_value_t = 2.0)]
    pub camera_distance: f64,

    /// Single-view occlusion slack, fraction of the bounding-box diagonal
    #[arg(long, default_value_t = 0.01)]
    pub depth_tolerance: f64,

    /// Augment scale range
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub scale_range: Option<Vec<f64>>,

    /// Augment translation half-range per axis
    #[arg(long, default_value_t = 0.2)]
    pub translate: f64,
}

fn parse_kind(s: &str) -> Result<CorruptionKind, String> {
    s.parse().map_err(|e: shapekit::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct IouArgs {
    /// A box string, or a file with one box per line
    pub a: String,

    /// A box string, or a file with one box per line
    pub b: String,
}

#[derive(Debug, Args)]
pub struct RegArgs {
    /// Predicted boxes, one per line; unparsable lines count as misses
    pub predictions: PathBuf,

    /// Ground-truth boxes, one per line
    pub ground_truth: PathBuf,

    /// IoU needed for a hit
    #[arg(long, default_value_t = shapekit::box6d::REG_IOU_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum JudgeArg {
    /// Offline token-F1 judge
    Stub,
    /// Chat-completions endpoint from JUDGE_ENDPOINT, JUDGE_MODEL, JUDGE_API_KEY
    Http,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Question/answer records, JSON lines
    pub records: PathBuf,

    /// Judge backend
    #[arg(long, value_enum, default_value_t = JudgeArg::Stub)]
    pub judge: JudgeArg,

    /// Judge rounds per answer
    #[arg(long, default_value_t = shapekit::eval::DEFAULT_K)]
    pub rounds: usize,

    /// Concurrent judge calls
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,

    /// Also write per-answer scores as JSON lines
    #[arg(long, value_name = "FILE")]
    pub scores: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report written by eval in JSON
    pub report: PathBuf,
}
