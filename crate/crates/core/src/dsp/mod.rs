//! Signal-processing kernels.

mod f0;
mod mel;
mod pqmf;
mod stft;
mod wav;

pub use f0::{estimate_f0, F0Config, F0Track, RMS_GATE, VOICING_THRESHOLD};
pub use mel::{dct_ortho, mel_cepstrum, mel_cepstrum_with, mel_filterbank, mel_spectrogram, MelConfig, MelFilterbank, LOG_FLOOR};
pub use pqmf::{design_pqmf, pqmf_analyze, pqmf_synthesize, roundtrip, PqmfBank, RoundTrip, Subbands};
pub use stft::{stft_magnitude, stft_magnitude_frames, SpectralFrameSeries, StftConfig, Window};
pub use wav::{read_wav, write_wav, SampleFormat};

#[derive(Debug, thiserror::Error)]
pub enum DspError {
    #[error("invalid audio: {0}")]
    Audio(String),
    #[error("invalid STFT config: {0}")]
    Config(String),
    #[error("signal has {len} samples, shorter than one {window}-sample window")]
    TooShort { len: usize, window: usize },
    #[error("invalid frequency range: {0}")]
    FrequencyRange(String),
    #[error("cepstral order {order} must be below the {bins} mel bands")]
    OrderTooLarge { order: usize, bins: usize },
    #[error("invalid PQMF parameters: {0}")]
    Pqmf(String),
    #[error("cutoff search failed to bracket a minimum: {0}")]
    Bracket(String),
    #[error("expected {expected} subbands, got {found}")]
    BandCount { expected: usize, found: usize },
    #[error("wav: {0}")]
    Wav(#[from] hound::Error),
}

/// Mono waveform at a declared sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, DspError> {
        if sample_rate == 0 {
            return Err(DspError::Audio("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(DspError::Audio(format!("non-finite sample at index {i}")));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Same rate, samples mapped through `f`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            samples: self.samples.iter().map(|&v| f(v)).collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn scaled(&self, gain: f64) -> Self {
        self.map(|v| v * gain)
    }
}
