use serde::Serialize;
use voxsel_core::dsp::{design_pqmf, pqmf_analyze, read_wav, AudioBuffer, StftConfig};
use voxsel_core::losses::{multi_resolution_breakdown, SpectralLoss, StftLossConfig};

use crate::args::{PresetArg, StftLossArgs};
use crate::error::{at_path, required, CliError, CliResult};
use crate::output::{envelope_json, write_atomic};
use crate::show;

#[derive(Serialize)]
struct Effective {
    a: String,
    b: String,
    preset: PresetArg,
    #[serde(skip_serializing_if = "Option::is_none")]
    bands: Option<usize>,
    resolutions: Vec<StftConfig>,
}

#[derive(Serialize)]
struct Resolution {
    sc: f64,
    mag: f64,
    total: f64,
}

#[derive(Serialize)]
struct Signal {
    label: String,
    resolutions: Vec<Resolution>,
    loss: f64,
}

#[derive(Serialize)]
struct Body {
    /// Mean over bands for the subband preset, the single signal's loss otherwise.
    loss: f64,
    signals: Vec<Signal>,
}

fn summarise(label: String, parts: Vec<SpectralLoss>) -> Signal {
    let loss = parts.iter().map(SpectralLoss::total).sum::<f64>() / parts.len() as f64;
    Signal {
        label,
        resolutions: parts
            .into_iter()
            .map(|p| Resolution {
                sc: p.sc,
                mag: p.mag,
                total: p.total(),
            })
            .collect(),
        loss,
    }
}

pub fn run(a: StftLossArgs) -> CliResult<()> {
    let a_path = required(a.a, "stftloss", "a")?;
    let b_path = required(a.b, "stftloss", "b")?;
    let out = required(a.out, "stftloss", "out")?;
    let preset = a.preset.unwrap_or(PresetArg::Fullband);
    let x = at_path(&a_path, read_wav(&a_path))?;
    let y = at_path(&b_path, read_wav(&b_path))?;
    if x.sample_rate() != y.sample_rate() || x.len() != y.len() {
        return Err(CliError::Data(format!(
            "stftloss: signals differ in shape ({} samples at {} Hz vs {} samples at {} Hz)",
            x.len(),
            x.sample_rate(),
            y.len(),
            y.sample_rate()
        )));
    }

    let (cfg, bands, signals) = match preset {
        PresetArg::Fullband => {
            let cfg = StftLossConfig::fullband();
            let parts = multi_resolution_breakdown(&x, &y, &cfg)?;
            (cfg, None, vec![summarise("fullband".into(), parts)])
        }
        PresetArg::Subband => {
            let cfg = StftLossConfig::subband();
            let k = a.bands.unwrap_or(5);
            let bank = design_pqmf(k, 62, 9.0)?;
            let (xs, ys) = (pqmf_analyze(&bank, &x), pqmf_analyze(&bank, &y));
            let rate = xs.band_rate();
            let mut signals = Vec::with_capacity(k);
            for (i, (xb, yb)) in xs.bands.iter().zip(&ys.bands).enumerate() {
                let xb = AudioBuffer::new(xb.clone(), rate).map_err(voxsel_core::Error::from)?;
                let yb = AudioBuffer::new(yb.clone(), rate).map_err(voxsel_core::Error::from)?;
                signals.push(summarise(format!("band{i}"), multi_resolution_breakdown(&xb, &yb, &cfg)?));
            }
            (cfg, Some(k), signals)
        }
    };
    let loss = signals.iter().map(|s| s.loss).sum::<f64>() / signals.len() as f64;
    let effective = Effective {
        a: show(&a_path),
        b: show(&b_path),
        preset,
        bands,
        resolutions: cfg.resolutions,
    };
    write_atomic(&out, envelope_json("stftloss", &effective, &Body { loss, signals })?.as_bytes())
}
