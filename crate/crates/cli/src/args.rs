use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "voxsel", version, about = "Speaker-similarity corpus selection and speech evaluation")]
pub struct Cli {
    /// TOML file with per-subcommand defaults; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for inner loops (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub log_level: Option<LogLevel>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogLevel {
    Error,
    Warn,
    Info,
    Debug,
}

impl LogLevel {
    pub fn filter(self) -> log::LevelFilter {
        match self {
            Self::Error => log::LevelFilter::Error,
            Self::Warn => log::LevelFilter::Warn,
            Self::Info => log::LevelFilter::Info,
            Self::Debug => log::LevelFilter::Debug,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank a candidate pool against a target speaker and select the top k.
    Select(SelectArgs),
    /// Recompute selection statistics of a report against a reference report.
    Stats(StatsArgs),
    /// Histogram of raw PLDA scores from a report, as CSV.
    Hist(HistArgs),
    /// Objective metrics over reference/test pairs.
    Eval(EvalArgs),
    /// Design a PQMF bank and measure its reconstruction.
    Pqmf(PqmfArgs),
    /// Multi-resolution STFT loss between two WAV files.
    Stftloss(StftLossArgs),
    /// Summarise an embedding pool.
    PoolInfo(PoolInfoArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Select(_) => "select",
            Self::Stats(_) => "stats",
            Self::Hist(_) => "hist",
            Self::Eval(_) => "eval",
            Self::Pqmf(_) => "pqmf",
            Self::Stftloss(_) => "stftloss",
            Self::PoolInfo(_) => "pool-info",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriterionArg {
    Dc1,
    Dc2,
    Dc3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Jsonl,
    Xvecbin,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectArgs {
    #[arg(long)]
    pub pool: Option<PathBuf>,
    #[arg(long)]
    pub plda: Option<PathBuf>,
    /// Target utterances (same formats as the pool); their mean is the target embedding.
    #[arg(long)]
    pub target: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub criterion: Option<CriterionArg>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub sigmoid_c: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Plain-text adaptation list (default: next to --out with a .list.txt suffix).
    #[arg(long)]
    pub list: Option<PathBuf>,
    /// Report whose selection is the overlap reference.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// File with one speaker id per line to leave out of the candidates.
    #[arg(long)]
    pub exclude_speakers: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsArgs {
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Write the statistics JSON here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupArg {
    None,
    Tag,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistArgs {
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub group_by: Option<GroupArg>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalArgs {
    /// TSV lines: ref_path<TAB>test_path[<TAB>ref_emb_id<TAB>test_emb_id].
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long)]
    pub plda: Option<PathBuf>,
    /// Pool holding the embeddings referenced from the pairs file.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub mcd_order: Option<usize>,
    #[arg(long)]
    pub fft_size: Option<usize>,
    #[arg(long)]
    pub hop: Option<usize>,
    #[arg(long)]
    pub frame_period_ms: Option<f64>,
    #[arg(long)]
    pub f0_min: Option<f64>,
    #[arg(long)]
    pub f0_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticArg {
    WhiteNoise,
    Tones,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PqmfArgs {
    #[arg(long)]
    pub bands: Option<usize>,
    #[arg(long)]
    pub taps: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// WAV file to push through analysis and synthesis.
    #[arg(long)]
    pub roundtrip: Option<PathBuf>,
    /// Generate the round-trip input instead of reading a file.
    #[arg(long, value_enum, conflicts_with = "roundtrip")]
    pub synthetic: Option<SyntheticArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub sample_rate: Option<u32>,
    #[arg(long)]
    pub seconds: Option<f64>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also write the reconstructed signal as 32-bit float WAV.
    #[arg(long)]
    pub write_reconstruction: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetArg {
    Fullband,
    Subband,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StftLossArgs {
    /// Generated signal.
    #[arg(long)]
    pub a: Option<PathBuf>,
    /// Reference signal.
    #[arg(long)]
    pub b: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    /// PQMF band count used to decompose both signals for the subband preset.
    #[arg(long)]
    pub bands: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoolInfoArgs {
    #[arg(long)]
    pub pool: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}
