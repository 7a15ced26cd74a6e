//! Spectral and adversarial training losses, as plain numeric functions.
//!
//! The spectral loss at one resolution is spectral convergence
//! `||Y| - |X||_F / ||Y||_F` plus the mean absolute log-magnitude difference, where `y`
//! is the reference. Multi-resolution losses average that sum over resolutions.
//! Adversarial losses are the least-squares forms, with expectations taken as
//! arithmetic means over the provided discriminator outputs.

use serde::{Deserialize, Serialize};

use crate::dsp::{stft_magnitude_frames, AudioBuffer, DspError, StftConfig, Subbands};

/// Magnitudes are floored here before taking logs.
pub const MAG_FLOOR: f64 = 1e-7;

#[derive(Debug, thiserror::Error)]
pub enum LossError {
    #[error("signals differ in length ({0} vs {1})")]
    Length(usize, usize),
    #[error("signals differ in sample rate ({0} vs {1})")]
    SampleRate(u32, u32),
    #[error("reference spectrum is all zero; spectral convergence undefined")]
    ZeroReference,
    #[error("band mismatch: {0}")]
    Bands(String),
    #[error("empty score vector at discriminator {0}")]
    EmptyScores(usize),
    #[error("need at least one discriminator and matching real/fake lists ({real} vs {fake})")]
    DiscriminatorCount { real: usize, fake: usize },
    #[error("loss config needs at least one resolution")]
    NoResolutions,
    #[error("{0}")]
    Dsp(#[from] DspError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftLossConfig {
    pub resolutions: Vec<StftConfig>,
}

impl StftLossConfig {
    pub fn new(resolutions: Vec<StftConfig>) -> Result<Self, LossError> {
        if resolutions.is_empty() {
            return Err(LossError::NoResolutions);
        }
        for r in &resolutions {
            r.validate()?;
        }
        Ok(Self { resolutions })
    }

    fn from_triples(fft: [usize; 3], hop: [usize; 3], win: [usize; 3]) -> Self {
        let resolutions = (0..3)
            .map(|i| StftConfig::new(fft[i], hop[i], win[i]).expect("preset is valid"))
            .collect();
        Self { resolutions }
    }

    /// FFT [1024, 2048, 4096], shift [120, 240, 480], window [600, 1200, 2400].
    pub fn fullband() -> Self {
        Self::from_triples([1024, 2048, 4096], [120, 240, 480], [600, 1200, 2400])
    }

    /// FFT [384, 683, 171], shift [30, 60, 10], window [150, 300, 60].
    pub fn subband() -> Self {
        Self::from_triples([384, 683, 171], [30, 60, 10], [150, 300, 60])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GanLossWeights {
    pub lambda_adv: f64,
}

impl Default for GanLossWeights {
    fn default() -> Self {
        Self { lambda_adv: 2.5 }
    }
}

/// Spectral-convergence and log-magnitude terms at one resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLoss {
    pub sc: f64,
    pub mag: f64,
}

impl SpectralLoss {
    pub fn total(&self) -> f64 {
        self.sc + self.mag
    }
}

fn check_pair(x: &AudioBuffer, y: &AudioBuffer) -> Result<(), LossError> {
    if x.sample_rate() != y.sample_rate() {
        return Err(LossError::SampleRate(x.sample_rate(), y.sample_rate()));
    }
    if x.len() != y.len() {
        return Err(LossError::Length(x.len(), y.len()));
    }
    Ok(())
}

/// `x` is the generated signal, `y` the reference.
pub fn stft_loss_single(x: &AudioBuffer, y: &AudioBuffer, cfg: &StftConfig) -> Result<SpectralLoss, LossError> {
    check_pair(x, y)?;
    spectral_loss(x.samples(), y.samples(), cfg)
}

fn spectral_loss(x: &[f64], y: &[f64], cfg: &StftConfig) -> Result<SpectralLoss, LossError> {
    if x.len() != y.len() {
        return Err(LossError::Length(x.len(), y.len()));
    }
    let fx = stft_magnitude_frames(x, cfg)?;
    let fy = stft_magnitude_frames(y, cfg)?;
    let (mut diff2, mut ref2, mut abs_log) = (0.0, 0.0, 0.0);
    let mut count = 0usize;
    for (rx, ry) in fx.iter().zip(&fy) {
        for (&a, &b) in rx.iter().zip(ry) {
            diff2 += (b - a) * (b - a);
            ref2 += b * b;
            abs_log += (b.max(MAG_FLOOR).ln() - a.max(MAG_FLOOR).ln()).abs();
            count += 1;
        }
    }
    if ref2 == 0.0 {
        return Err(LossError::ZeroReference);
    }
    Ok(SpectralLoss {
        sc: (diff2 / ref2).sqrt(),
        mag: abs_log / count as f64,
    })
}

/// Per-resolution terms, in config order.
pub fn multi_resolution_breakdown(
    x: &AudioBuffer,
    y: &AudioBuffer,
    cfg: &StftLossConfig,
) -> Result<Vec<SpectralLoss>, LossError> {
    check_pair(x, y)?;
    breakdown_samples(x.samples(), y.samples(), cfg)
}

fn breakdown_samples(x: &[f64], y: &[f64], cfg: &StftLossConfig) -> Result<Vec<SpectralLoss>, LossError> {
    if cfg.resolutions.is_empty() {
        return Err(LossError::NoResolutions);
    }
    cfg.resolutions.iter().map(|r| spectral_loss(x, y, r)).collect()
}

fn mean_total(parts: &[SpectralLoss]) -> f64 {
    parts.iter().map(SpectralLoss::total).sum::<f64>() / parts.len() as f64
}

pub fn multi_resolution_stft_loss(x: &AudioBuffer, y: &AudioBuffer, cfg: &StftLossConfig) -> Result<f64, LossError> {
    Ok(mean_total(&multi_resolution_breakdown(x, y, cfg)?))
}

/// Fullband loss plus the mean of the per-band losses at the decimated rate.
pub fn combined_sp_loss(
    x_full: &AudioBuffer,
    y_full: &AudioBuffer,
    x_sub: &Subbands,
    y_sub: &Subbands,
    full_cfg: &StftLossConfig,
    sub_cfg: &StftLossConfig,
) -> Result<f64, LossError> {
    let full = multi_resolution_stft_loss(x_full, y_full, full_cfg)?;
    Ok(full + subband_loss(x_sub, y_sub, sub_cfg)?)
}

/// Mean over bands of the multi-resolution loss of each band.
pub fn subband_loss(x_sub: &Subbands, y_sub: &Subbands, cfg: &StftLossConfig) -> Result<f64, LossError> {
    if x_sub.num_bands() != y_sub.num_bands() || x_sub.num_bands() == 0 {
        return Err(LossError::Bands(format!(
            "{} generated vs {} reference bands",
            x_sub.num_bands(),
            y_sub.num_bands()
        )));
    }
    if x_sub.fullband_rate != y_sub.fullband_rate {
        return Err(LossError::SampleRate(x_sub.fullband_rate, y_sub.fullband_rate));
    }
    let mut sum = 0.0;
    for (i, (xb, yb)) in x_sub.bands.iter().zip(&y_sub.bands).enumerate() {
        if xb.len() != yb.len() {
            return Err(LossError::Bands(format!("band {i}: {} vs {} samples", xb.len(), yb.len())));
        }
        sum += mean_total(&breakdown_samples(xb, yb, cfg)?);
    }
    Ok(sum / x_sub.num_bands() as f64)
}

fn mean(v: &[f64], k: usize) -> Result<f64, LossError> {
    if v.is_empty() {
        return Err(LossError::EmptyScores(k));
    }
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// `(1/K) sum_k [ mean((1 - real_k)^2) + mean(fake_k^2) ]`.
pub fn discriminator_loss(real_scores: &[Vec<f64>], fake_scores: &[Vec<f64>]) -> Result<f64, LossError> {
    if real_scores.is_empty() || real_scores.len() != fake_scores.len() {
        return Err(LossError::DiscriminatorCount {
            real: real_scores.len(),
            fake: fake_scores.len(),
        });
    }
    let mut total = 0.0;
    for (k, (real, fake)) in real_scores.iter().zip(fake_scores).enumerate() {
        let r: Vec<f64> = real.iter().map(|d| (1.0 - d) * (1.0 - d)).collect();
        let f: Vec<f64> = fake.iter().map(|d| d * d).collect();
        total += mean(&r, k)? + mean(&f, k)?;
    }
    Ok(total / real_scores.len() as f64)
}

/// `mean((1 - fake)^2)`.
pub fn adversarial_loss(fake_scores: &[f64]) -> Result<f64, LossError> {
    let sq: Vec<f64> = fake_scores.iter().map(|d| (1.0 - d) * (1.0 - d)).collect();
    mean(&sq, 0)
}

pub fn generator_loss(adv: f64, sp: f64, w: &GanLossWeights) -> f64 {
    w.lambda_adv * adv + sp
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect()
    }

    #[test]
    fn gan_anchors() {
        let ones = vec![1.0; 4];
        let zeros = vec![0.0; 4];
        assert_eq!(discriminator_loss(std::slice::from_ref(&ones), std::slice::from_ref(&zeros)).unwrap(), 0.0);
        assert_eq!(discriminator_loss(std::slice::from_ref(&zeros), std::slice::from_ref(&ones)).unwrap(), 2.0);
        assert_eq!(adversarial_loss(&ones).unwrap(), 0.0);
        assert_eq!(adversarial_loss(&zeros).unwrap(), 1.0);
        assert_eq!(adversarial_loss(&[0.5, 1.5]).unwrap(), 0.25);
        let w = GanLossWeights::default();
        assert_eq!(generator_loss(0.0, 0.0, &w), 0.0);
        assert_eq!(generator_loss(1.0, 0.0, &w), 2.5);
        assert_eq!(generator_loss(0.4, 1.0, &w), 2.0);
    }

    #[test]
    fn gan_errors() {
        assert!(adversarial_loss(&[]).is_err());
        assert!(discriminator_loss(&[], &[]).is_err());
        assert!(discriminator_loss(&[vec![1.0]], &[]).is_err());
        assert!(matches!(
            discriminator_loss(&[vec![1.0], vec![]], &[vec![0.0], vec![0.0]]),
            Err(LossError::EmptyScores(1))
        ));
    }

    #[test]
    fn mixed_discriminators_match_hand_average() {
        let real = vec![vec![0.9, 0.2], vec![0.5], vec![1.1, 0.0, 0.3]];
        let fake = vec![vec![0.1], vec![0.7, -0.2], vec![0.4, 0.4]];
        let per_k: Vec<f64> = real
            .iter()
            .zip(&fake)
            .map(|(r, f)| {
                r.iter().map(|d| (1.0 - d) * (1.0 - d)).sum::<f64>() / r.len() as f64
                    + f.iter().map(|d| d * d).sum::<f64>() / f.len() as f64
            })
            .collect();
        let want = per_k.iter().sum::<f64>() / 3.0;
        assert!((discriminator_loss(&real, &fake).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn spectral_identity_and_scaling() {
        let y = AudioBuffer::new(noise(8000, 1), 16000).unwrap();
        let cfg = StftConfig::new(512, 128, 400).unwrap();
        let l = stft_loss_single(&y, &y, &cfg).unwrap();
        assert_eq!((l.sc, l.mag), (0.0, 0.0));
        let l = stft_loss_single(&y.scaled(2.0), &y, &cfg).unwrap();
        assert!((l.sc - 1.0).abs() < 1e-9);
        assert!((l.mag - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn silence_vs_sine() {
        let y: Vec<f64> = (0..8000).map(|i| (0.1 * i as f64).sin()).collect();
        let y = AudioBuffer::new(y, 16000).unwrap();
        let x = AudioBuffer::new(vec![0.0; 8000], 16000).unwrap();
        let cfg = StftConfig::new(512, 128, 400).unwrap();
        let l = stft_loss_single(&x, &y, &cfg).unwrap();
        assert!((l.sc - 1.0).abs() < 1e-12);
        assert!(l.mag > 0.0);
        assert!(matches!(stft_loss_single(&y, &x, &cfg), Err(LossError::ZeroReference)));
    }

    #[test]
    fn mismatched_inputs() {
        let a = AudioBuffer::new(vec![0.1; 1000], 16000).unwrap();
        let b = AudioBuffer::new(vec![0.1; 1001], 16000).unwrap();
        let c = AudioBuffer::new(vec![0.1; 1000], 8000).unwrap();
        let cfg = StftConfig::new(256, 64, 256).unwrap();
        assert!(matches!(stft_loss_single(&a, &b, &cfg), Err(LossError::Length(..))));
        assert!(matches!(stft_loss_single(&a, &c, &cfg), Err(LossError::SampleRate(..))));
        assert!(StftLossConfig::new(vec![]).is_err());
    }

    #[test]
    fn single_resolution_equals_single_loss() {
        let y = AudioBuffer::new(noise(6000, 2), 16000).unwrap();
        let x = AudioBuffer::new(noise(6000, 3), 16000).unwrap();
        let cfg = StftConfig::new(256, 64, 200).unwrap();
        let single = stft_loss_single(&x, &y, &cfg).unwrap();
        let multi = multi_resolution_stft_loss(&x, &y, &StftLossConfig::new(vec![cfg]).unwrap()).unwrap();
        assert_eq!(multi, single.sc + single.mag);
    }
}
