//! Objective evaluation of paired natural/synthetic audio and paired embeddings.
//!
//! Test signals are aligned to the reference before analysis: a longer test signal is
//! trimmed symmetrically, a shorter one is zero-padded at the end. A length difference
//! larger than one hop is rejected.

use serde::{Deserialize, Serialize};

use crate::dsp::{estimate_f0, mel_cepstrum, stft_magnitude_frames, AudioBuffer, DspError, F0Config, F0Track, StftConfig};
use crate::embeddings::Embedding;
use crate::parallel;
use crate::plda::{PldaError, PldaModel};

/// Additive floor inside the LSD logarithm.
pub const LSD_EPS: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("length mismatch of {diff} samples exceeds one hop ({hop})")]
    Length { diff: usize, hop: usize },
    #[error("sample rates differ ({0} vs {1})")]
    SampleRate(u32, u32),
    #[error("frame counts {0} and {1} differ by more than one")]
    Frames(usize, usize),
    #[error("cepstra lack coefficient {0}")]
    Order(usize),
    #[error("embedding dimensions differ ({0} vs {1})")]
    Dimension(usize, usize),
    #[error("zero-norm embedding")]
    ZeroVector,
    #[error("no pairs to evaluate")]
    NoPairs,
    #[error("no metric is computable from the provided inputs")]
    NothingComputable,
    #[error("pair {index}: {source}")]
    Pair {
        index: usize,
        #[source]
        source: Box<MetricError>,
    },
    #[error("{0}")]
    Dsp(#[from] DspError),
    #[error("{0}")]
    Plda(#[from] PldaError),
}

/// Aligns `test` to `reference_len` samples.
pub fn align_length(test: &AudioBuffer, reference_len: usize, hop: usize) -> Result<AudioBuffer, MetricError> {
    let n = test.len();
    let diff = n.abs_diff(reference_len);
    if diff > hop {
        return Err(MetricError::Length { diff, hop });
    }
    let samples = if n >= reference_len {
        let front = diff / 2;
        test.samples()[front..front + reference_len].to_vec()
    } else {
        let mut s = test.samples().to_vec();
        s.resize(reference_len, 0.0);
        s
    };
    Ok(AudioBuffer::new(samples, test.sample_rate())?)
}

fn aligned(x: &AudioBuffer, y: &AudioBuffer, hop: usize) -> Result<AudioBuffer, MetricError> {
    if x.sample_rate() != y.sample_rate() {
        return Err(MetricError::SampleRate(x.sample_rate(), y.sample_rate()));
    }
    align_length(x, y.len(), hop)
}

/// Per-frame log-spectral distortion in dB.
pub fn lsd_frames(x: &AudioBuffer, y: &AudioBuffer, cfg: &StftConfig) -> Result<Vec<f64>, MetricError> {
    let x = aligned(x, y, cfg.hop)?;
    let fx = stft_magnitude_frames(x.samples(), cfg)?;
    let fy = stft_magnitude_frames(y.samples(), cfg)?;
    Ok(fx
        .iter()
        .zip(&fy)
        .map(|(a, b)| {
            let s: f64 = a
                .iter()
                .zip(b)
                .map(|(&p, &q)| {
                    let d = 20.0 * (p + LSD_EPS).log10() - 20.0 * (q + LSD_EPS).log10();
                    d * d
                })
                .sum();
            (s / a.len() as f64).sqrt()
        })
        .collect())
}

/// Log-spectral distortion of test `x` against reference `y`, mean over frames.
pub fn lsd(x: &AudioBuffer, y: &AudioBuffer, cfg: &StftConfig) -> Result<f64, MetricError> {
    let f = lsd_frames(x, y, cfg)?;
    Ok(f.iter().sum::<f64>() / f.len() as f64)
}

/// `10 sqrt(2) / ln 10`, the dB scale for natural-log cepstra.
pub fn mcd_constant() -> f64 {
    10.0 * 2f64.sqrt() / std::f64::consts::LN_10
}

/// MCD over `c1..=c_order`, excluding `c0`, on frame-aligned cepstra.
pub fn mcd_from_cepstra(cx: &[Vec<f64>], cy: &[Vec<f64>], order: usize) -> Result<f64, MetricError> {
    if cx.len().abs_diff(cy.len()) > 1 {
        return Err(MetricError::Frames(cx.len(), cy.len()));
    }
    let frames = cx.len().min(cy.len());
    if frames == 0 {
        return Err(MetricError::Frames(cx.len(), cy.len()));
    }
    let mut total = 0.0;
    for (a, b) in cx.iter().zip(cy).take(frames) {
        if a.len() <= order || b.len() <= order {
            return Err(MetricError::Order(order));
        }
        let d: f64 = (1..=order).map(|d| (a[d] - b[d]) * (a[d] - b[d])).sum();
        total += d.sqrt();
    }
    Ok(mcd_constant() * total / frames as f64)
}

pub fn mcd_with(x: &AudioBuffer, y: &AudioBuffer, cfg: &StftConfig, order: usize) -> Result<f64, MetricError> {
    let x = aligned(x, y, cfg.hop)?;
    let cx = mel_cepstrum(&x, cfg, order)?;
    let cy = mel_cepstrum(y, cfg, order)?;
    mcd_from_cepstra(&cx, &cy, order)
}

/// MCD with the default analysis settings.
pub fn mcd(x: &AudioBuffer, y: &AudioBuffer, order: usize) -> Result<f64, MetricError> {
    mcd_with(x, y, &MetricConfig::default().stft, order)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F0Metrics {
    pub rmse_hz: f64,
    pub uv_error_pct: f64,
}

/// RMSE over all frames (unvoiced frames count as 0 Hz) and U/V mismatch rate.
pub fn f0_metrics_from_tracks(tx: &F0Track, ty: &F0Track) -> Result<F0Metrics, MetricError> {
    if tx.len().abs_diff(ty.len()) > 1 {
        return Err(MetricError::Frames(tx.len(), ty.len()));
    }
    let n = tx.len().min(ty.len());
    if n == 0 {
        return Err(MetricError::Frames(tx.len(), ty.len()));
    }
    let sq: f64 = (0..n).map(|t| (tx.f0_hz[t] - ty.f0_hz[t]).powi(2)).sum();
    let mismatched = (0..n).filter(|&t| tx.voiced[t] != ty.voiced[t]).count();
    Ok(F0Metrics {
        rmse_hz: (sq / n as f64).sqrt(),
        uv_error_pct: 100.0 * mismatched as f64 / n as f64,
    })
}

pub fn f0_metrics(x: &AudioBuffer, y: &AudioBuffer, cfg: &F0Config) -> Result<F0Metrics, MetricError> {
    let hop = (cfg.frame_period_ms * y.sample_rate() as f64 / 1000.0).round().max(1.0) as usize;
    let x = aligned(x, y, hop)?;
    let tx = estimate_f0(&x, cfg.frame_period_ms, cfg.fmin_hz, cfg.fmax_hz)?;
    let ty = estimate_f0(y, cfg.frame_period_ms, cfg.fmin_hz, cfg.fmax_hz)?;
    f0_metrics_from_tracks(&tx, &ty)
}

pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64, MetricError> {
    if a.dim() != b.dim() {
        return Err(MetricError::Dimension(a.dim(), b.dim()));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(MetricError::ZeroVector);
    }
    let dot: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Shared by LSD and the mel-cepstrum behind MCD.
    pub stft: StftConfig,
    pub mcd_order: usize,
    pub f0: F0Config,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            stft: StftConfig {
                fft_size: 2048,
                hop: 220,
                window_length: 2048,
                window: Default::default(),
            },
            mcd_order: 24,
            f0: F0Config::default(),
        }
    }
}

/// One reference/test pair. Audio and embeddings are each optional.
#[derive(Debug, Clone, Default)]
pub struct PairInput {
    pub label: String,
    pub reference_audio: Option<AudioBuffer>,
    pub test_audio: Option<AudioBuffer>,
    pub reference_embedding: Option<Embedding>,
    pub test_embedding: Option<Embedding>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PairMetrics {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lsd_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mcd_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f0_rmse_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uv_error_pct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cos_sim: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plda: Option<f64>,
}

/// Aggregates are means over the pairs that provide the metric; absent rows stay `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lsd_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mcd_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f0_rmse_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uv_error_pct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cos_sim: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plda: Option<f64>,
    pub pairs: Vec<PairMetrics>,
}

fn evaluate_pair(pair: &PairInput, model: Option<&PldaModel>, cfg: &MetricConfig) -> Result<PairMetrics, MetricError> {
    let mut m = PairMetrics {
        label: pair.label.clone(),
        ..Default::default()
    };
    if let (Some(r), Some(t)) = (&pair.reference_audio, &pair.test_audio) {
        m.lsd_db = Some(lsd(t, r, &cfg.stft)?);
        m.mcd_db = Some(mcd_with(t, r, &cfg.stft, cfg.mcd_order)?);
        let f0 = f0_metrics(t, r, &cfg.f0)?;
        m.f0_rmse_hz = Some(f0.rmse_hz);
        m.uv_error_pct = Some(f0.uv_error_pct);
    }
    if let (Some(r), Some(t)) = (&pair.reference_embedding, &pair.test_embedding) {
        m.cos_sim = Some(cosine_similarity(r, t)?);
        if let Some(model) = model {
            m.plda = Some(model.score(&model.prepare(r)?, &model.prepare(t)?)?);
        }
    }
    Ok(m)
}

fn mean_of(pairs: &[PairMetrics], f: impl Fn(&PairMetrics) -> Option<f64>) -> Option<f64> {
    let vals: Vec<f64> = pairs.iter().filter_map(f).collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

pub fn evaluate_pair_set(pairs: &[PairInput], model: Option<&PldaModel>, cfg: &MetricConfig) -> Result<EvalReport, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::NoPairs);
    }
    let results = parallel::map_range(pairs.len(), |i| {
        evaluate_pair(&pairs[i], model, cfg).map_err(|e| MetricError::Pair {
            index: i + 1,
            source: Box::new(e),
        })
    });
    let pairs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let report = EvalReport {
        lsd_db: mean_of(&pairs, |p| p.lsd_db),
        mcd_db: mean_of(&pairs, |p| p.mcd_db),
        f0_rmse_hz: mean_of(&pairs, |p| p.f0_rmse_hz),
        uv_error_pct: mean_of(&pairs, |p| p.uv_error_pct),
        cos_sim: mean_of(&pairs, |p| p.cos_sim),
        plda: mean_of(&pairs, |p| p.plda),
        pairs,
    };
    let any = [
        report.lsd_db,
        report.mcd_db,
        report.f0_rmse_hz,
        report.uv_error_pct,
        report.cos_sim,
        report.plda,
    ]
    .iter()
    .any(Option::is_some);
    if !any {
        return Err(MetricError::NothingComputable);
    }
    Ok(report)
}
