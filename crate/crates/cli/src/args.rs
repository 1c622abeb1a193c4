use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use humap::hierarchy::{
    DEFAULT_BETA, DEFAULT_K, DEFAULT_OMEGA, DEFAULT_THETA, DEFAULT_UPSILON, DEFAULT_WALKS_PER_POINT,
    DEFAULT_WALK_LENGTH,
};
use humap::ExecMode;
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "humap", version, about = "Hierarchical manifold approximation and projection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a hierarchy from a data matrix and store it in a directory.
    Fit(RunConfig),
    /// Embed a whole level, projecting missing levels above it first.
    Project(ProjectArgs),
    /// Embed the points of a level that belong to selected landmarks of the level above.
    Drill(DrillArgs),
    /// Compute quality metrics for projected levels.
    Eval(EvalArgs),
    /// Run the explorer HTTP service.
    Serve(ServeArgs),
}

#[derive(ValueEnum, Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Csv,
    Binary,
}

impl From<InputFormat> for humap::MatrixFormat {
    fn from(f: InputFormat) -> Self {
        match f {
            InputFormat::Csv => humap::MatrixFormat::Csv,
            InputFormat::Binary => humap::MatrixFormat::Binary,
        }
    }
}

/// Everything `fit` needs; stored as `config.json` in the output directory.
#[derive(Args, Serialize, Deserialize, Clone, Debug)]
pub struct RunConfig {
    /// Data matrix, one point per row.
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    /// Points per level from the full data down, e.g. 2000,400,80.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub level_sizes: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    /// Landmark-selection walks per point.
    #[arg(long, default_value_t = DEFAULT_WALKS_PER_POINT)]
    pub n_walks: usize,
    #[arg(long, default_value_t = DEFAULT_WALK_LENGTH)]
    pub walk_length: usize,
    /// Neighborhood walks per non-landmark.
    #[arg(long, default_value_t = DEFAULT_OMEGA)]
    pub omega: usize,
    /// Maximum neighborhood walk length.
    #[arg(long, default_value_t = DEFAULT_UPSILON)]
    pub upsilon: usize,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    /// Movement fraction of inherited coordinates.
    #[arg(long, default_value_t = DEFAULT_THETA)]
    pub theta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Layout epochs; 500 up to 10,000 points and 200 beyond when omitted.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Hierarchy directory to create.
    #[arg(long)]
    pub output: PathBuf,
    /// deterministic or parallel.
    #[arg(long, default_value = "deterministic")]
    pub mode: ExecMode,
}

#[derive(Args, Debug)]
pub struct ProjectArgs {
    #[arg(long)]
    pub hierarchy: PathBuf,
    #[arg(long)]
    pub level: usize,
    /// Landmark ids of the level above; turns the command into a drill-down.
    #[arg(long)]
    pub selection: Option<PathBuf>,
    /// Where to write the embedding (defaults to the directory cache).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write an n x 2 binary matrix instead of CSV.
    #[arg(long)]
    pub binary: bool,
}

#[derive(Args, Debug)]
pub struct DrillArgs {
    #[arg(long)]
    pub hierarchy: PathBuf,
    /// Level to embed; the selection holds landmark ids of `level + 1`.
    #[arg(long)]
    pub level: usize,
    #[arg(long)]
    pub selection: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub binary: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub hierarchy: PathBuf,
    /// Original data; defaults to the input recorded by `fit`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    /// Comma-separated: np, demap, tc (trustworthiness and continuity), disparity.
    #[arg(long, default_value = "np,demap,tc")]
    pub metrics: String,
    /// Levels to evaluate; every projected level when omitted.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub levels: Option<Vec<usize>>,
    /// Largest neighborhood size for the curves.
    #[arg(long, default_value_t = 30)]
    pub k_max: usize,
    /// Report path; `.csv` selects the long CSV format (default `metrics.json` in the directory).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:7878")]
    pub bind: SocketAddr,
    /// Directory with the built browser bundle served under /ui.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
}
