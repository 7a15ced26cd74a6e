use std::path::{Path, PathBuf};

use voxsel_core::dsp::DspError;
use voxsel_core::embeddings::PoolError;
use voxsel_core::losses::LossError;
use voxsel_core::metrics::MetricError;
use voxsel_core::plda::PldaError;
use voxsel_core::selection::SelectionError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {source}", path.display())]
    Toml { path: PathBuf, source: Box<toml::de::Error> },
    #[error("{0}")]
    Core(#[from] voxsel_core::Error),
    #[error("{}: {source}", path.display())]
    Input { path: PathBuf, source: voxsel_core::Error },
    #[error("{0}")]
    Data(String),
}

impl CliError {
    /// 1 for usage problems, 2 for everything the data or the filesystem caused.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) | Self::Toml { .. } => 1,
            _ => 2,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

macro_rules! from_core {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::Core(e.into())
            }
        })*
    };
}

from_core!(PoolError, PldaError, SelectionError, DspError, LossError, MetricError);

/// Attaches the offending input path to a core error.
pub fn at_path<T, E: Into<voxsel_core::Error>>(path: &Path, r: Result<T, E>) -> CliResult<T> {
    r.map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        source: e.into(),
    })
}

pub type CliResult<T> = Result<T, CliError>;

/// Unwraps a merged option or reports which flag is missing.
pub fn required<T>(value: Option<T>, command: &str, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| {
        CliError::Usage(format!(
            "{command}: --{flag} is required (as a flag or under [{section}] in the config file)",
            section = command.replace('-', "_"),
        ))
    })
}
