//! Speaker-similarity corpus selection and audio evaluation.
//!
//! The crate is split by concern:
//!
//! * [`embeddings`]: utterance embedding pools, file formats and per-speaker statistics.
//! * [`plda`]: simplified PLDA model loading and log-likelihood-ratio scoring.
//! * [`selection`]: the three relational selection criteria, ranking, and report statistics.
//! * [`dsp`]: STFT, mel analysis, mel-cepstra, F0 tracking, WAV I/O and the PQMF filterbank.
//! * [`losses`]: multi-resolution STFT losses and least-squares GAN losses.
//! * [`metrics`]: LSD, MCD, F0 RMSE, U/V error and embedding similarity.
//!
//! With the default `parallel` feature, the heavy inner loops (candidate scoring,
//! framewise spectra, F0 frames, per-pair evaluation) run on the rayon global pool.
//! Without it everything runs sequentially. Results are identical either way.

pub mod dsp;
pub mod embeddings;
mod error;
pub mod losses;
pub mod metrics;
mod parallel;
pub mod plda;
pub mod selection;
mod sum;

pub use error::{Error, Result};

/// Whether this build runs its inner loops on rayon.
pub fn parallel_enabled() -> bool {
    parallel::enabled()
}
