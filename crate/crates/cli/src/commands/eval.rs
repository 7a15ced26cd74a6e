use std::path::{Path, PathBuf};

use serde::Serialize;
use voxsel_core::dsp::{read_wav, F0Config, StftConfig};
use voxsel_core::embeddings::{load_pool_auto, EmbeddingPool};
use voxsel_core::metrics::{evaluate_pair_set, MetricConfig, PairInput};
use voxsel_core::plda::load_plda;

use crate::args::EvalArgs;
use crate::error::{at_path, required, CliError, CliResult};
use crate::output::{envelope_json, write_atomic};
use crate::show;

#[derive(Serialize)]
struct Effective {
    pairs: String,
    plda: Option<String>,
    embeddings: Option<String>,
    metrics: MetricConfig,
}

/// One parsed line of the pairs file. `-` in an audio column means "no audio".
#[derive(Debug, PartialEq)]
struct PairLine {
    line: usize,
    reference: Option<PathBuf>,
    test: Option<PathBuf>,
    embedding_ids: Option<(String, String)>,
}

fn parse_pairs(text: &str, base: &Path) -> CliResult<Vec<PairLine>> {
    let resolve = |s: &str| -> Option<PathBuf> {
        if s == "-" {
            None
        } else {
            let p = Path::new(s);
            Some(if p.is_absolute() { p.to_path_buf() } else { base.join(p) })
        }
    };
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let embedding_ids = match cols.len() {
            2 => None,
            4 => Some((cols[2].to_string(), cols[3].to_string())),
            n => {
                return Err(CliError::Data(format!(
                    "pairs line {}: expected 2 or 4 tab-separated columns, found {n}",
                    i + 1
                )))
            }
        };
        out.push(PairLine {
            line: i + 1,
            reference: resolve(cols[0]),
            test: resolve(cols[1]),
            embedding_ids,
        });
    }
    if out.is_empty() {
        return Err(CliError::Data("pairs file has no entries".into()));
    }
    Ok(out)
}

fn to_input(p: &PairLine, pool: Option<&EmbeddingPool>) -> CliResult<PairInput> {
    let wav = |path: &Option<PathBuf>| -> CliResult<_> {
        path.as_deref()
            .map(|p| at_path(p, read_wav(p)))
            .transpose()
    };
    let mut input = PairInput {
        label: match &p.test {
            Some(t) => t.display().to_string(),
            None => format!("line {}", p.line),
        },
        reference_audio: wav(&p.reference)?,
        test_audio: wav(&p.test)?,
        ..Default::default()
    };
    if let Some((r, t)) = &p.embedding_ids {
        let pool = pool.ok_or_else(|| {
            CliError::Usage(format!("eval: pairs line {} names embeddings but --embeddings is not set", p.line))
        })?;
        input.reference_embedding = Some(pool.find_utterance(r)?.embedding.clone());
        input.test_embedding = Some(pool.find_utterance(t)?.embedding.clone());
    }
    if input.reference_audio.is_some() != input.test_audio.is_some() {
        return Err(CliError::Data(format!("pairs line {}: only one side has audio", p.line)));
    }
    Ok(input)
}

pub fn run(a: EvalArgs) -> CliResult<()> {
    let pairs_path = required(a.pairs, "eval", "pairs")?;
    let out = required(a.out, "eval", "out")?;
    let defaults = MetricConfig::default();
    let fft = a.fft_size.unwrap_or(defaults.stft.fft_size);
    let cfg = MetricConfig {
        stft: StftConfig::new(fft, a.hop.unwrap_or(defaults.stft.hop), fft).map_err(voxsel_core::Error::from)?,
        mcd_order: a.mcd_order.unwrap_or(defaults.mcd_order),
        f0: F0Config {
            frame_period_ms: a.frame_period_ms.unwrap_or(defaults.f0.frame_period_ms),
            fmin_hz: a.f0_min.unwrap_or(defaults.f0.fmin_hz),
            fmax_hz: a.f0_max.unwrap_or(defaults.f0.fmax_hz),
        },
    };

    let text = std::fs::read_to_string(&pairs_path).map_err(|e| CliError::io(&pairs_path, e))?;
    let base = pairs_path.parent().unwrap_or(Path::new(""));
    let lines = parse_pairs(&text, base)?;
    let pool = a.embeddings.as_deref().map(|p| at_path(p, load_pool_auto(p))).transpose()?;
    let model = a.plda.as_deref().map(|p| at_path(p, load_plda(p))).transpose()?;
    let inputs = lines
        .iter()
        .map(|p| to_input(p, pool.as_ref()))
        .collect::<CliResult<Vec<_>>>()?;
    log::info!("evaluating {} pairs", inputs.len());
    let report = evaluate_pair_set(&inputs, model.as_ref(), &cfg)?;

    let effective = Effective {
        pairs: show(&pairs_path),
        plda: a.plda.as_deref().map(show),
        embeddings: a.embeddings.as_deref().map(show),
        metrics: cfg,
    };
    write_atomic(&out, envelope_json("eval", &effective, &report)?.as_bytes())
}
