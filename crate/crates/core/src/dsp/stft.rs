use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{AudioBuffer, DspError};
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Hann,
}

/// Analysis settings. Any FFT length is accepted, not only powers of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftConfig {
    pub fft_size: usize,
    pub hop: usize,
    pub window_length: usize,
    #[serde(default)]
    pub window: Window,
}

impl StftConfig {
    pub fn new(fft_size: usize, hop: usize, window_length: usize) -> Result<Self, DspError> {
        let cfg = Self {
            fft_size,
            hop,
            window_length,
            window: Window::Hann,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), DspError> {
        if self.hop == 0 {
            return Err(DspError::Config("hop must be positive".into()));
        }
        if !(self.hop <= self.window_length && self.window_length <= self.fft_size) {
            return Err(DspError::Config(format!(
                "need hop <= window_length <= fft_size, got {} / {} / {}",
                self.hop, self.window_length, self.fft_size
            )));
        }
        Ok(())
    }

    pub fn num_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Frame count for a centred analysis of `len` samples.
    pub fn num_frames(&self, len: usize) -> usize {
        let half = self.fft_size / 2;
        1 + (len + 2 * half - self.fft_size) / self.hop
    }

    /// Periodic Hann of `window_length`, centred inside an `fft_size` frame.
    fn padded_window(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.fft_size];
        let off = (self.fft_size - self.window_length) / 2;
        let n = self.window_length as f64;
        for i in 0..self.window_length {
            w[off + i] = 0.5 - 0.5 * (2.0 * PI * i as f64 / n).cos();
        }
        w
    }
}

/// Framewise magnitude spectra, `num_frames x (fft_size / 2 + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFrameSeries {
    pub frames: Vec<Vec<f64>>,
    pub config: StftConfig,
    pub sample_rate: u32,
}

impl SpectralFrameSeries {
    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn num_bins(&self) -> usize {
        self.config.num_bins()
    }
}

pub fn stft_magnitude(audio: &AudioBuffer, cfg: &StftConfig) -> Result<SpectralFrameSeries, DspError> {
    Ok(SpectralFrameSeries {
        frames: stft_magnitude_frames(audio.samples(), cfg)?,
        config: *cfg,
        sample_rate: audio.sample_rate(),
    })
}

/// Mirror index into `0..n` (reflection without repeating the edge sample).
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Centred STFT magnitudes of a raw sample slice with reflection padding.
pub fn stft_magnitude_frames(samples: &[f64], cfg: &StftConfig) -> Result<Vec<Vec<f64>>, DspError> {
    cfg.validate()?;
    if samples.len() < cfg.window_length {
        return Err(DspError::TooShort {
            len: samples.len(),
            window: cfg.window_length,
        });
    }
    let n = cfg.fft_size;
    let window = cfg.padded_window();
    let off = (n - cfg.window_length) / 2;
    let half = (n / 2) as isize;
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(n);
    let scratch_len = fft.get_inplace_scratch_len();
    let bins = cfg.num_bins();

    let frames = parallel::map_range_init(
        cfg.num_frames(samples.len()),
        || (vec![Complex::new(0.0, 0.0); n], vec![Complex::new(0.0, 0.0); scratch_len]),
        |(buf, scratch), t| {
            buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            let start = (t * cfg.hop) as isize - half;
            for j in off..off + cfg.window_length {
                let x = samples[reflect(start + j as isize, samples.len())];
                buf[j] = Complex::new(x * window[j], 0.0);
            }
            fft.process_with_scratch(buf, scratch);
            buf[..bins].iter().map(|c| c.norm()).collect::<Vec<f64>>()
        },
    );
    Ok(frames)
}
