//! Inner-loop throughput with one worker versus the full rayon pool.
//!
//! Built without the `parallel` feature, only the sequential variants run.

use std::collections::HashSet;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use voxsel_core::dsp::{stft_magnitude, AudioBuffer, StftConfig};
use voxsel_core::embeddings::{Embedding, EmbeddingPool, UtteranceRecord};
use voxsel_core::plda::PldaModel;
use voxsel_core::selection::{rank_pool, SelectionConfig};

fn pool(speakers: usize, utts: usize, dim: usize) -> EmbeddingPool {
    let mut rng = StdRng::seed_from_u64(7);
    let mut records = Vec::with_capacity(speakers * utts);
    for s in 0..speakers {
        let center: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
        for u in 0..utts {
            let e = center.iter().map(|c| c + 0.2 * (rng.random::<f64>() - 0.5)).collect();
            records.push(UtteranceRecord::new(format!("s{s}"), format!("s{s}u{u}"), Embedding::new(e).unwrap()));
        }
    }
    EmbeddingPool::from_records(records).unwrap()
}

type Job<'a> = &'a mut (dyn FnMut() + Send);
type Runner = Box<dyn Fn(Job<'_>)>;

#[cfg(feature = "parallel")]
fn variants() -> Vec<(&'static str, Runner)> {
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    vec![
        ("one-thread", Box::new(move |f: Job<'_>| single.install(&mut *f))),
        ("rayon", Box::new(|f: Job<'_>| f())),
    ]
}

#[cfg(not(feature = "parallel"))]
fn variants() -> Vec<(&'static str, Runner)> {
    vec![("sequential", Box::new(|f: Job<'_>| f()))]
}

fn bench_rank_pool(c: &mut Criterion) {
    let pool = pool(200, 50, 128);
    let model = PldaModel::diagonal(vec![1.0; 128]).unwrap();
    let target = pool.speaker_mean("s0").unwrap();
    let cfg = SelectionConfig::default();
    let none = HashSet::new();
    let mut group = c.benchmark_group("rank_pool_10k_x128");
    group.sample_size(10);
    for (name, run) in variants() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run(&mut || {
                std::hint::black_box(rank_pool(&pool, &model, &target, &cfg, &none).unwrap());
            }))
        });
    }
    group.finish();
}

fn bench_stft(c: &mut Criterion) {
    let mut rng = StdRng::seed_from_u64(8);
    let audio = AudioBuffer::new((0..441_000).map(|_| rng.random::<f64>() - 0.5).collect(), 44_100).unwrap();
    let cfg = StftConfig::new(2048, 240, 1200).unwrap();
    let mut group = c.benchmark_group("stft_10s_44k");
    group.sample_size(10);
    for (name, run) in variants() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run(&mut || {
                std::hint::black_box(stft_magnitude(&audio, &cfg).unwrap());
            }))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_rank_pool, bench_stft);
criterion_main!(benches);
