//! Cosine-modulated pseudo-QMF filterbank.
//!
//! The prototype is a Kaiser-windowed sinc lowpass with `taps + 1` coefficients.
//! Band `k` of `K` uses
//!
//! ```text
//! h_k[n] = 2 p[n] cos((2k + 1) pi / (2K) (n - taps/2) + (-1)^k pi/4)   analysis
//! g_k[n] = 2 p[n] cos((2k + 1) pi / (2K) (n - taps/2) - (-1)^k pi/4)   synthesis
//! ```
//!
//! The prototype cutoff (in cycles per sample) is chosen inside `(0, 1/(2K))` by
//! minimising the worst-case deviation of `|sum_k H_k G_k|` from unity over a dense
//! frequency grid: a coarse scan brackets the minimum, golden-section search refines it.
//!
//! Filtering is centred: each filter's `taps/2` delay is absorbed by padding the input
//! with `taps/2` leading zeros, so the round trip has no net delay.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{AudioBuffer, DspError};
use crate::parallel;

const GRID_POINTS: usize = 1024;
const SCAN_POINTS: usize = 64;
const GOLDEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PqmfBank {
    num_bands: usize,
    taps: usize,
    kaiser_beta: f64,
    cutoff: f64,
    analysis: Vec<Vec<f64>>,
    synthesis: Vec<Vec<f64>>,
}

/// Decimated subband signals plus the fullband rate they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Subbands {
    pub bands: Vec<Vec<f64>>,
    pub fullband_rate: u32,
}

impl Subbands {
    pub fn num_bands(&self) -> usize {
        self.bands.len()
    }

    pub fn band_len(&self) -> usize {
        self.bands.first().map_or(0, Vec::len)
    }

    /// Rate of each decimated band (rounded down).
    pub fn band_rate(&self) -> u32 {
        self.fullband_rate / self.bands.len().max(1) as u32
    }
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..500 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn kaiser(len: usize, beta: f64) -> Vec<f64> {
    let m = (len - 1) as f64;
    let denom = bessel_i0(beta);
    (0..len)
        .map(|n| {
            let r = 2.0 * n as f64 / m - 1.0;
            bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / denom
        })
        .collect()
}

fn prototype(taps: usize, beta: f64, cutoff: f64) -> Vec<f64> {
    let wc = 2.0 * PI * cutoff;
    let half = (taps / 2) as f64;
    kaiser(taps + 1, beta)
        .into_iter()
        .enumerate()
        .map(|(n, w)| {
            let m = n as f64 - half;
            let s = if m == 0.0 { wc / PI } else { (wc * m).sin() / (PI * m) };
            s * w
        })
        .collect()
}

fn modulate(proto: &[f64], num_bands: usize, taps: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let half = (taps / 2) as f64;
    let k_f = num_bands as f64;
    let mut analysis = Vec::with_capacity(num_bands);
    let mut synthesis = Vec::with_capacity(num_bands);
    for k in 0..num_bands {
        let phase = if k % 2 == 0 { PI / 4.0 } else { -PI / 4.0 };
        let a = (2 * k + 1) as f64 * PI / (2.0 * k_f);
        let hk = proto
            .iter()
            .enumerate()
            .map(|(n, p)| 2.0 * p * (a * (n as f64 - half) + phase).cos())
            .collect();
        let gk = proto
            .iter()
            .enumerate()
            .map(|(n, p)| 2.0 * p * (a * (n as f64 - half) - phase).cos())
            .collect();
        analysis.push(hk);
        synthesis.push(gk);
    }
    (analysis, synthesis)
}

/// Frequency response of an FIR filter at `omega` radians per sample.
pub(crate) fn freq_response(h: &[f64], omega: f64) -> Complex<f64> {
    h.iter()
        .enumerate()
        .map(|(n, &c)| Complex::from_polar(c, -omega * n as f64))
        .sum()
}

impl PqmfBank {
    /// Builds a bank at a fixed prototype cutoff (cycles per sample).
    pub fn with_cutoff(num_bands: usize, taps: usize, kaiser_beta: f64, cutoff: f64) -> Result<Self, DspError> {
        validate(num_bands, taps, kaiser_beta)?;
        if !(cutoff > 0.0 && cutoff < 0.5) {
            return Err(DspError::Pqmf(format!("cutoff {cutoff} outside (0, 0.5)")));
        }
        let proto = prototype(taps, kaiser_beta, cutoff);
        let (analysis, synthesis) = modulate(&proto, num_bands, taps);
        Ok(Self {
            num_bands,
            taps,
            kaiser_beta,
            cutoff,
            analysis,
            synthesis,
        })
    }

    pub fn num_bands(&self) -> usize {
        self.num_bands
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    pub fn kaiser_beta(&self) -> f64 {
        self.kaiser_beta
    }

    /// Prototype cutoff in cycles per sample.
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn analysis_filters(&self) -> &[Vec<f64>] {
        &self.analysis
    }

    pub fn synthesis_filters(&self) -> &[Vec<f64>] {
        &self.synthesis
    }

    /// Worst-case `| |sum_k H_k G_k| - 1 |` over a uniform grid on `[0, pi]`.
    pub fn reconstruction_deviation(&self) -> f64 {
        distortion_deviation(&self.analysis, &self.synthesis)
    }
}

fn distortion_deviation(analysis: &[Vec<f64>], synthesis: &[Vec<f64>]) -> f64 {
    let devs = parallel::map_range(GRID_POINTS, |i| {
        let omega = PI * i as f64 / (GRID_POINTS - 1) as f64;
        let t: Complex<f64> = analysis
            .iter()
            .zip(synthesis)
            .map(|(h, g)| freq_response(h, omega) * freq_response(g, omega))
            .sum();
        (t.norm() - 1.0).abs()
    });
    devs.into_iter().fold(0.0, f64::max)
}

fn validate(num_bands: usize, taps: usize, beta: f64) -> Result<(), DspError> {
    if num_bands < 2 {
        return Err(DspError::Pqmf(format!("need at least 2 bands, got {num_bands}")));
    }
    if taps == 0 || !taps.is_multiple_of(2) {
        return Err(DspError::Pqmf(format!("taps must be positive and even, got {taps}")));
    }
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(DspError::Pqmf(format!("kaiser beta must be >= 0, got {beta}")));
    }
    Ok(())
}

/// Designs a near-perfect-reconstruction bank with an optimised prototype cutoff.
pub fn design_pqmf(num_bands: usize, taps: usize, kaiser_beta: f64) -> Result<PqmfBank, DspError> {
    validate(num_bands, taps, kaiser_beta)?;
    let objective = |cutoff: f64| {
        let proto = prototype(taps, kaiser_beta, cutoff);
        let (a, s) = modulate(&proto, num_bands, taps);
        distortion_deviation(&a, &s)
    };
    let upper = 1.0 / (2.0 * num_bands as f64);
    let step = upper / SCAN_POINTS as f64;
    // interior scan points only; the open interval excludes both ends
    let scan: Vec<(f64, f64)> = (1..SCAN_POINTS)
        .map(|i| {
            let c = step * i as f64;
            (c, objective(c))
        })
        .collect();
    let best = scan
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .expect("scan is non-empty");
    if best == 0 || best == scan.len() - 1 {
        return Err(DspError::Bracket(format!(
            "best coarse cutoff {:.5} lies on the search boundary for {num_bands} bands, {taps} taps, beta {kaiser_beta}",
            scan[best].0
        )));
    }
    let cutoff = golden_section(objective, scan[best - 1].0, scan[best + 1].0);
    PqmfBank::with_cutoff(num_bands, taps, kaiser_beta, cutoff)
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > GOLDEN_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Filters each band and decimates by the band count. Output has `ceil(N / K)` samples per band.
pub fn pqmf_analyze(bank: &PqmfBank, audio: &AudioBuffer) -> Subbands {
    let x = audio.samples();
    let k = bank.num_bands;
    let half = bank.taps / 2;
    let out_len = x.len().div_ceil(k);
    let bands = parallel::map_slice(&bank.analysis, |h| {
        (0..out_len)
            .map(|m| {
                // y[m] = sum_j h[j] x[m K + taps/2 - j]
                let center = m * k + half;
                let j_lo = center.saturating_sub(x.len() - 1);
                let j_hi = center.min(bank.taps);
                (j_lo..=j_hi).map(|j| h[j] * x[center - j]).sum()
            })
            .collect()
    });
    Subbands {
        bands,
        fullband_rate: audio.sample_rate(),
    }
}

/// Zero-stuffs each band by the band count (gain `K`), filters, and sums.
pub fn pqmf_synthesize(bank: &PqmfBank, subbands: &Subbands) -> Result<AudioBuffer, DspError> {
    if subbands.num_bands() != bank.num_bands {
        return Err(DspError::BandCount {
            expected: bank.num_bands,
            found: subbands.num_bands(),
        });
    }
    let k = bank.num_bands;
    let m_len = subbands.band_len();
    if subbands.bands.iter().any(|b| b.len() != m_len) {
        return Err(DspError::Pqmf("subbands have unequal lengths".into()));
    }
    let n = m_len * k;
    let half = bank.taps / 2;
    let idx: Vec<usize> = (0..k).collect();
    let parts = parallel::map_slice(&idx, |&b| {
        let g = &bank.synthesis[b];
        let y = &subbands.bands[b];
        let mut out = vec![0.0; n];
        for (m, &v) in y.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let v = v * k as f64;
            // out[p - taps/2 + j] += g[j] * v, with p = m K
            let p = m * k;
            for (j, &gj) in g.iter().enumerate() {
                let t = p + j;
                if t >= half && t - half < n {
                    out[t - half] += gj * v;
                }
            }
        }
        out
    });
    let mut out = vec![0.0; n];
    for part in parts {
        for (o, p) in out.iter_mut().zip(part) {
            *o += p;
        }
    }
    AudioBuffer::new(out, subbands.fullband_rate)
}

/// Result of an analysis/synthesis round trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundTrip {
    pub snr_db: f64,
    /// Integer lag (samples) that best aligned the reconstruction with the input.
    pub lag: isize,
    /// Samples excluded from each edge before measuring.
    pub edge_trim: usize,
    pub num_samples: usize,
}

/// Round-trips `audio` through the bank and measures reconstruction SNR after
/// lag alignment and edge trimming.
pub fn roundtrip(bank: &PqmfBank, audio: &AudioBuffer) -> Result<(RoundTrip, AudioBuffer), DspError> {
    let x = audio.samples();
    let trim = bank.taps;
    if x.len() <= 2 * trim + 1 {
        return Err(DspError::TooShort {
            len: x.len(),
            window: 2 * trim + 2,
        });
    }
    let sub = pqmf_analyze(bank, audio);
    let mut y = pqmf_synthesize(bank, &sub)?.into_samples();
    y.truncate(x.len());

    let max_lag = bank.taps as isize;
    let lo = trim as isize;
    let hi = (x.len() - trim) as isize;
    let corr = |lag: isize| -> f64 {
        (lo..hi)
            .map(|i| {
                let j = i + lag;
                if j >= 0 && (j as usize) < y.len() {
                    x[i as usize] * y[j as usize]
                } else {
                    0.0
                }
            })
            .sum()
    };
    let lag = (-max_lag..=max_lag)
        .map(|l| (l, corr(l)))
        .fold((0isize, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0;
    let (mut sig, mut err) = (0.0, 0.0);
    for i in lo..hi {
        let j = i + lag;
        let r = if j >= 0 && (j as usize) < y.len() { y[j as usize] } else { 0.0 };
        let s = x[i as usize];
        sig += s * s;
        err += (s - r) * (s - r);
    }
    let snr_db = if err == 0.0 { f64::INFINITY } else { 10.0 * (sig / err).log10() };
    let report = RoundTrip {
        snr_db,
        lag,
        edge_trim: trim,
        num_samples: x.len(),
    };
    Ok((report, AudioBuffer::new(y, audio.sample_rate())?))
}
