//! Frame-wise F0 by normalised cross-correlation.
//!
//! Each frame correlates a `max_lag`-sample reference segment with its lagged copy:
//!
//! ```text
//! r(tau) = sum x[n] x[n + tau] / sqrt(sum x[n]^2 * sum x[n + tau]^2)
//! ```
//!
//! over `tau` in `[fs / fmax, fs / fmin]`. The chosen lag is the first local maximum
//! reaching 90% of the best local maximum, refined by parabolic interpolation.

use serde::{Deserialize, Serialize};

use super::{AudioBuffer, DspError};
use crate::parallel;

/// Minimum correlation peak for a voiced decision.
pub const VOICING_THRESHOLD: f64 = 0.3;
/// Minimum frame RMS (full scale = 1.0) for a voiced decision.
pub const RMS_GATE: f64 = 1e-4;
const OCTAVE_GUARD: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F0Config {
    pub frame_period_ms: f64,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
}

impl Default for F0Config {
    fn default() -> Self {
        Self {
            frame_period_ms: 5.0,
            fmin_hz: 70.0,
            fmax_hz: 400.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F0Track {
    /// 0 for unvoiced frames.
    pub f0_hz: Vec<f64>,
    pub voiced: Vec<bool>,
    pub frame_period_ms: f64,
}

impl F0Track {
    pub fn len(&self) -> usize {
        self.f0_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0_hz.is_empty()
    }

    pub fn voiced_fraction(&self) -> f64 {
        if self.voiced.is_empty() {
            return 0.0;
        }
        self.voiced.iter().filter(|&&v| v).count() as f64 / self.voiced.len() as f64
    }
}

pub fn estimate_f0(audio: &AudioBuffer, frame_period_ms: f64, fmin_hz: f64, fmax_hz: f64) -> Result<F0Track, DspError> {
    let fs = audio.sample_rate() as f64;
    if !(fmin_hz > 0.0 && fmin_hz < fmax_hz && fmax_hz < fs / 2.0) {
        return Err(DspError::FrequencyRange(format!(
            "need 0 < fmin < fmax < fs/2, got {fmin_hz}..{fmax_hz} at {fs} Hz"
        )));
    }
    if !(frame_period_ms.is_finite() && frame_period_ms > 0.0) {
        return Err(DspError::Config(format!("frame period must be positive, got {frame_period_ms}")));
    }
    let min_lag = ((fs / fmax_hz).floor() as usize).max(1);
    let max_lag = (fs / fmin_hz).ceil() as usize;
    let window = max_lag;
    let seg_len = window + max_lag + 1;

    let x = audio.samples();
    let period = frame_period_ms * fs / 1000.0;
    let num_frames = (x.len() as f64 / period).floor() as usize + 1;

    let results = parallel::map_range_init(
        num_frames,
        || vec![0.0; seg_len],
        |seg, t| {
            let center = (t as f64 * period).round() as isize;
            // keep the segment inside the signal when the signal is long enough
            let start = if x.len() >= seg_len {
                (center - (seg_len / 2) as isize).clamp(0, (x.len() - seg_len) as isize)
            } else {
                0
            };
            for (j, s) in seg.iter_mut().enumerate() {
                let i = start + j as isize;
                *s = if i >= 0 && (i as usize) < x.len() { x[i as usize] } else { 0.0 };
            }
            analyse_frame(seg, window, min_lag, max_lag, fs, fmin_hz, fmax_hz)
        },
    );
    let (f0_hz, voiced) = results.into_iter().unzip();
    Ok(F0Track {
        f0_hz,
        voiced,
        frame_period_ms,
    })
}

fn analyse_frame(
    seg: &[f64],
    window: usize,
    min_lag: usize,
    max_lag: usize,
    fs: f64,
    fmin: f64,
    fmax: f64,
) -> (f64, bool) {
    let rms = (seg.iter().map(|v| v * v).sum::<f64>() / seg.len() as f64).sqrt();
    if rms < RMS_GATE {
        return (0.0, false);
    }
    let e0: f64 = seg[..window].iter().map(|v| v * v).sum();
    let mut etau: f64 = seg[min_lag..min_lag + window].iter().map(|v| v * v).sum();
    let mut r = vec![0.0; max_lag + 1];
    for tau in min_lag..=max_lag {
        if tau > min_lag {
            let out = seg[tau - 1];
            let inn = seg[tau + window - 1];
            etau += inn * inn - out * out;
        }
        let denom = (e0 * etau.max(0.0)).sqrt();
        if denom > 0.0 {
            let num: f64 = seg[..window].iter().zip(&seg[tau..tau + window]).map(|(a, b)| a * b).sum();
            r[tau] = num / denom;
        }
    }
    let peaks: Vec<usize> = (min_lag + 1..max_lag)
        .filter(|&t| r[t] > r[t - 1] && r[t] >= r[t + 1])
        .collect();
    let Some(best) = peaks.iter().map(|&t| r[t]).reduce(f64::max) else {
        return (0.0, false);
    };
    let tau = *peaks
        .iter()
        .find(|&&t| r[t] >= OCTAVE_GUARD * best)
        .expect("best peak qualifies");
    if r[tau] < VOICING_THRESHOLD {
        return (0.0, false);
    }
    let (a, b, c) = (r[tau - 1], r[tau], r[tau + 1]);
    let curvature = a - 2.0 * b + c;
    let shift = if curvature < 0.0 { 0.5 * (a - c) / curvature } else { 0.0 };
    let f0 = fs / (tau as f64 + shift.clamp(-0.5, 0.5));
    if f0 < fmin || f0 > fmax {
        return (0.0, false);
    }
    (f0, true)
}
