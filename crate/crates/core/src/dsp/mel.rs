use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::stft::{stft_magnitude_frames, StftConfig};
use super::{AudioBuffer, DspError};

/// Floor applied to mel energies before the natural log.
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MelConfig {
    pub num_mels: usize,
    pub fmin: f64,
    /// `None` means the Nyquist frequency.
    pub fmax: Option<f64>,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self {
            num_mels: 80,
            fmin: 0.0,
            fmax: None,
        }
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters on the HTK mel scale, stored sparsely.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// (first bin, weights) per filter.
    rows: Vec<(usize, Vec<f64>)>,
    num_bins: usize,
}

impl MelFilterbank {
    pub fn num_mels(&self) -> usize {
        self.rows.len()
    }

    /// Dense weights of filter `m` over all FFT bins.
    pub fn dense_row(&self, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.num_bins];
        let (start, w) = &self.rows[m];
        out[*start..start + w.len()].copy_from_slice(w);
        out
    }

    pub fn apply(&self, magnitudes: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|(start, w)| w.iter().zip(&magnitudes[*start..]).map(|(a, b)| a * b).sum())
            .collect()
    }
}

pub fn mel_filterbank(sample_rate: u32, fft_size: usize, num_mels: usize, fmin: f64, fmax: f64) -> Result<MelFilterbank, DspError> {
    let nyquist = sample_rate as f64 / 2.0;
    if !(fmin >= 0.0 && fmin < fmax && fmax <= nyquist) {
        return Err(DspError::FrequencyRange(format!(
            "need 0 <= fmin < fmax <= {nyquist}, got {fmin}..{fmax}"
        )));
    }
    if num_mels == 0 {
        return Err(DspError::FrequencyRange("num_mels must be positive".into()));
    }
    let num_bins = fft_size / 2 + 1;
    let (mlo, mhi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    let points: Vec<f64> = (0..num_mels + 2)
        .map(|i| mel_to_hz(mlo + (mhi - mlo) * i as f64 / (num_mels + 1) as f64))
        .collect();
    let bin_hz = sample_rate as f64 / fft_size as f64;
    let mut rows = Vec::with_capacity(num_mels);
    for m in 0..num_mels {
        let (lo, c, hi) = (points[m], points[m + 1], points[m + 2]);
        let weights: Vec<(usize, f64)> = (0..num_bins)
            .filter_map(|k| {
                let f = k as f64 * bin_hz;
                let w = if f > lo && f <= c {
                    (f - lo) / (c - lo)
                } else if f > c && f < hi {
                    (hi - f) / (hi - c)
                } else {
                    0.0
                };
                (w > 0.0).then_some((k, w))
            })
            .collect();
        let Some(&(start, _)) = weights.first() else {
            return Err(DspError::FrequencyRange(format!(
                "mel band {m} ({lo:.1}-{hi:.1} Hz) contains no FFT bin; use fewer bands or a larger FFT"
            )));
        };
        rows.push((start, weights.into_iter().map(|(_, w)| w).collect()));
    }
    Ok(MelFilterbank { rows, num_bins })
}

fn log_mel_frames(audio: &AudioBuffer, cfg: &StftConfig, mel: &MelConfig) -> Result<Vec<Vec<f64>>, DspError> {
    let fmax = mel.fmax.unwrap_or(audio.sample_rate() as f64 / 2.0);
    let bank = mel_filterbank(audio.sample_rate(), cfg.fft_size, mel.num_mels, mel.fmin, fmax)?;
    let mags = stft_magnitude_frames(audio.samples(), cfg)?;
    Ok(mags
        .iter()
        .map(|f| bank.apply(f).into_iter().map(|e| e.max(LOG_FLOOR).ln()).collect())
        .collect())
}

/// Log mel spectrogram, `num_frames x num_mels`.
pub fn mel_spectrogram(
    audio: &AudioBuffer,
    cfg: &StftConfig,
    num_mels: usize,
    fmin: f64,
    fmax: f64,
) -> Result<Vec<Vec<f64>>, DspError> {
    log_mel_frames(
        audio,
        cfg,
        &MelConfig {
            num_mels,
            fmin,
            fmax: Some(fmax),
        },
    )
}

/// Orthonormal DCT-II of `x`, truncated to the first `n_out` coefficients.
pub fn dct_ortho(x: &[f64], n_out: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..n_out)
        .map(|k| {
            let s: f64 = x
                .iter()
                .enumerate()
                .map(|(m, &v)| v * (PI * k as f64 * (m as f64 + 0.5) / n).cos())
                .sum();
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            s * scale
        })
        .collect()
}

/// Mel-cepstrum with the default 80-band full-range filterbank.
pub fn mel_cepstrum(audio: &AudioBuffer, cfg: &StftConfig, order: usize) -> Result<Vec<Vec<f64>>, DspError> {
    mel_cepstrum_with(audio, cfg, &MelConfig::default(), order)
}

/// Coefficients `c0..=c_order` per frame: DCT of the log-mel energies.
pub fn mel_cepstrum_with(
    audio: &AudioBuffer,
    cfg: &StftConfig,
    mel: &MelConfig,
    order: usize,
) -> Result<Vec<Vec<f64>>, DspError> {
    if order == 0 || order >= mel.num_mels {
        return Err(DspError::OrderTooLarge {
            order,
            bins: mel.num_mels,
        });
    }
    Ok(log_mel_frames(audio, cfg, mel)?
        .iter()
        .map(|f| dct_ortho(f, order + 1))
        .collect())
}
