use std::f64::consts::PI;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use voxsel_core::dsp::{design_pqmf, read_wav, roundtrip, write_wav, AudioBuffer, RoundTrip, SampleFormat};

use crate::args::{PqmfArgs, SyntheticArg};
use crate::error::{at_path, CliError, CliResult};
use crate::output::{envelope_json, write_atomic, write_atomic_with};
use crate::show;

#[derive(Serialize)]
struct Effective {
    bands: usize,
    taps: usize,
    beta: f64,
    input: Option<String>,
    synthetic: Option<SyntheticArg>,
    seed: Option<u64>,
    sample_rate: Option<u32>,
    seconds: Option<f64>,
}

#[derive(Serialize)]
struct Design {
    cutoff: f64,
    reconstruction_deviation: f64,
}

#[derive(Serialize)]
struct Body {
    design: Design,
    #[serde(skip_serializing_if = "Option::is_none")]
    roundtrip: Option<RoundTrip>,
}

/// Tone frequencies for the synthetic multi-tone input, as fractions of the sample rate.
const TONES: [f64; 5] = [0.005, 0.031, 0.097, 0.213, 0.389];

/// Uniform white noise in [-0.5, 0.5) or five equal-amplitude tones with random phases.
pub fn synthetic_signal(kind: SyntheticArg, seed: u64, sample_rate: u32, seconds: f64) -> CliResult<AudioBuffer> {
    let n = (seconds * sample_rate as f64).round() as usize;
    let mut rng = StdRng::seed_from_u64(seed);
    let samples: Vec<f64> = match kind {
        SyntheticArg::WhiteNoise => (0..n).map(|_| rng.random::<f64>() - 0.5).collect(),
        SyntheticArg::Tones => {
            let phases: Vec<f64> = TONES.iter().map(|_| rng.random::<f64>() * 2.0 * PI).collect();
            (0..n)
                .map(|i| {
                    TONES
                        .iter()
                        .zip(&phases)
                        .map(|(f, p)| 0.18 * (2.0 * PI * f * i as f64 + p).sin())
                        .sum()
                })
                .collect()
        }
    };
    Ok(AudioBuffer::new(samples, sample_rate).map_err(voxsel_core::Error::from)?)
}

pub fn run(a: PqmfArgs) -> CliResult<()> {
    let report = a
        .report
        .ok_or_else(|| CliError::Usage("pqmf: --report is required".into()))?;
    let bands = a.bands.unwrap_or(5);
    let taps = a.taps.unwrap_or(62);
    let beta = a.beta.unwrap_or(9.0);
    let bank = design_pqmf(bands, taps, beta)?;
    log::info!("designed {bands}-band bank, cutoff {:.6}", bank.cutoff());

    let seed = a.seed.unwrap_or(0);
    let sample_rate = a.sample_rate.unwrap_or(44_100);
    let seconds = a.seconds.unwrap_or(1.0);
    let input = match (&a.roundtrip, a.synthetic) {
        (Some(p), _) => Some(at_path(p, read_wav(p))?),
        (None, Some(kind)) => Some(synthetic_signal(kind, seed, sample_rate, seconds)?),
        (None, None) => None,
    };
    if input.is_none() && a.write_reconstruction.is_some() {
        return Err(CliError::Usage(
            "pqmf: --write-reconstruction needs --roundtrip or --synthetic".into(),
        ));
    }
    let mut rt = None;
    if let Some(audio) = &input {
        let (stats, recon) = roundtrip(&bank, audio)?;
        log::info!("round-trip SNR {:.2} dB at lag {}", stats.snr_db, stats.lag);
        if let Some(p) = &a.write_reconstruction {
            write_atomic_with(p, |tmp| Ok(write_wav(tmp, &recon, SampleFormat::Float32)?))?;
        }
        rt = Some(stats);
    }

    let synthetic_used = a.roundtrip.is_none() && a.synthetic.is_some();
    let effective = Effective {
        bands,
        taps,
        beta,
        input: a.roundtrip.as_deref().map(show),
        synthetic: a.synthetic,
        seed: synthetic_used.then_some(seed),
        sample_rate: synthetic_used.then_some(sample_rate),
        seconds: synthetic_used.then_some(seconds),
    };
    let body = Body {
        design: Design {
            cutoff: bank.cutoff(),
            reconstruction_deviation: bank.reconstruction_deviation(),
        },
        roundtrip: rt,
    };
    write_atomic(&report, envelope_json("pqmf", &effective, &body)?.as_bytes())
}
