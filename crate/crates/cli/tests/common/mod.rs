//! Fixture builders shared by the CLI test targets.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::rngs::StdRng;
use rand::Rng;
use rand_distr::StandardNormal;
use voxsel_core::dsp::{write_wav, AudioBuffer, SampleFormat};
use voxsel_core::embeddings::{Embedding, EmbeddingPool, UtteranceRecord};
use voxsel_core::plda::PldaModel;

pub fn voxsel() -> Command {
    Command::new(env!("CARGO_BIN_EXE_voxsel"))
}

pub fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn voxsel");
    assert!(
        out.status.success(),
        "voxsel failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn normal_vec(rng: &mut StdRng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Speaker means drawn from `N(0, mean_scale^2 I)`, utterances scattered around them.
pub fn gaussian_pool(
    rng: &mut StdRng,
    speakers: usize,
    utts: usize,
    dim: usize,
    mean_scale: f64,
    spread: f64,
) -> Vec<UtteranceRecord> {
    let mut records = Vec::with_capacity(speakers * utts);
    for s in 0..speakers {
        let mean = normal_vec(rng, dim, mean_scale);
        for u in 0..utts {
            let e: Vec<f64> = mean.iter().map(|m| m + spread * rng.sample::<f64, _>(StandardNormal)).collect();
            records.push(UtteranceRecord::new(
                format!("spk{s:04}"),
                format!("spk{s:04}_utt{u:04}"),
                Embedding::new(e).unwrap(),
            ));
        }
    }
    records
}

pub fn write_pool(path: &Path, records: Vec<UtteranceRecord>) -> EmbeddingPool {
    let pool = EmbeddingPool::from_records(records).unwrap();
    pool.write_xvecbin(File::create(path).unwrap()).unwrap();
    pool
}

pub fn write_pool_jsonl(path: &Path, records: Vec<UtteranceRecord>) -> EmbeddingPool {
    let pool = EmbeddingPool::from_records(records).unwrap();
    pool.write_jsonl(File::create(path).unwrap()).unwrap();
    pool
}

/// Identity-transform model with a random positive between-class diagonal.
pub fn write_plda(path: &Path, rng: &mut StdRng, dim: usize) -> PldaModel {
    let psi: Vec<f64> = (0..dim).map(|_| rng.random_range(0.2..2.0)).collect();
    let model = PldaModel::diagonal(psi).unwrap();
    std::fs::write(path, model.to_json_string()).unwrap();
    model
}

pub fn sine(freq: f64, sample_rate: u32, seconds: f64, amp: f64) -> AudioBuffer {
    let n = (seconds * sample_rate as f64) as usize;
    let s = (0..n)
        .map(|i| amp * (2.0 * PI * freq * i as f64 / sample_rate as f64).sin())
        .collect();
    AudioBuffer::new(s, sample_rate).unwrap()
}

pub fn noise(rng: &mut StdRng, n: usize, sample_rate: u32, amp: f64) -> AudioBuffer {
    AudioBuffer::new(normal_vec(rng, n, amp), sample_rate).unwrap()
}

pub fn write_f32_wav(path: &Path, audio: &AudioBuffer) -> PathBuf {
    write_wav(path, audio, SampleFormat::Float32).unwrap();
    path.to_path_buf()
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}
