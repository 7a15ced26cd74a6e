use crate::dsp::DspError;
use crate::embeddings::PoolError;
use crate::losses::LossError;
use crate::metrics::MetricError;
use crate::plda::PldaError;
use crate::selection::SelectionError;

/// Crate-level error; every variant carries the module it came from.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("embeddings: {0}")]
    Pool(#[from] PoolError),
    #[error("plda: {0}")]
    Plda(#[from] PldaError),
    #[error("selection: {0}")]
    Selection(#[from] SelectionError),
    #[error("dsp: {0}")]
    Dsp(#[from] DspError),
    #[error("losses: {0}")]
    Loss(#[from] LossError),
    #[error("metrics: {0}")]
    Metric(#[from] MetricError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
