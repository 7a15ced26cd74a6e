use std::sync::OnceLock;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use voxsel_core::dsp::{design_pqmf, pqmf_analyze, AudioBuffer, PqmfBank, StftConfig, Subbands};
use voxsel_core::losses::{
    adversarial_loss, combined_sp_loss, discriminator_loss, generator_loss, multi_resolution_stft_loss,
    stft_loss_single, subband_loss, GanLossWeights, StftLossConfig,
};

fn noise(seed: u64, n: usize) -> AudioBuffer {
    let mut rng = StdRng::seed_from_u64(seed);
    AudioBuffer::new((0..n).map(|_| rng.random::<f64>() - 0.5).collect(), 44_100).unwrap()
}

fn bank() -> &'static PqmfBank {
    static BANK: OnceLock<PqmfBank> = OnceLock::new();
    BANK.get_or_init(|| design_pqmf(5, 62, 9.0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn discriminator_order_does_not_matter(
        scores in prop::collection::vec((prop::collection::vec(-1.0f64..2.0, 1..10), prop::collection::vec(-1.0f64..2.0, 1..10)), 1..6),
    ) {
        let (real, fake): (Vec<_>, Vec<_>) = scores.iter().cloned().unzip();
        let a = discriminator_loss(&real, &fake).unwrap();
        let (mut rr, mut ff) = (real.clone(), fake.clone());
        rr.reverse();
        ff.reverse();
        let b = discriminator_loss(&rr, &ff).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn generator_loss_slopes(adv in -10.0f64..10.0, sp in -10.0f64..10.0, lambda in 0.0f64..5.0) {
        let w = GanLossWeights { lambda_adv: lambda };
        let h = 1e-3;
        let d_adv = (generator_loss(adv + h, sp, &w) - generator_loss(adv - h, sp, &w)) / (2.0 * h);
        let d_sp = (generator_loss(adv, sp + h, &w) - generator_loss(adv, sp - h, &w)) / (2.0 * h);
        prop_assert!((d_adv - lambda).abs() < 1e-9);
        prop_assert!((d_sp - 1.0).abs() < 1e-9);
    }

    #[test]
    fn adversarial_loss_is_bounded_by_worst_score(fake in prop::collection::vec(0.0f64..1.0, 1..32)) {
        let l = adversarial_loss(&fake).unwrap();
        let worst = fake.iter().map(|d| (1.0 - d) * (1.0 - d)).fold(0.0, f64::max);
        prop_assert!(l >= 0.0 && l <= worst + 1e-15);
    }
}

#[test]
fn loss_ignores_joint_polarity_flip() {
    let y = noise(1, 20_000);
    let x = AudioBuffer::new(y.samples().iter().map(|v| 0.8 * v + 0.01).collect(), 44_100).unwrap();
    let cfg = StftLossConfig::fullband();
    let a = multi_resolution_stft_loss(&x, &y, &cfg).unwrap();
    let b = multi_resolution_stft_loss(&x.scaled(-1.0), &y.scaled(-1.0), &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn spectral_convergence_tracks_small_gain_errors() {
    let y = noise(2, 8000);
    let delta = 1e-3;
    let cfg = StftConfig::new(1024, 120, 600).unwrap();
    let l = stft_loss_single(&y.scaled(1.0 + delta), &y, &cfg).unwrap();
    assert!((l.sc - delta).abs() < 1e-4, "sc = {}", l.sc);
    assert!((l.mag - (1.0 + delta).ln()).abs() < 1e-9);
}

fn split(x: &AudioBuffer) -> Subbands {
    pqmf_analyze(bank(), x)
}

#[test]
fn combined_loss_is_fullband_plus_subband() {
    let y = noise(3, 44_100);
    let x = AudioBuffer::new(y.samples().iter().enumerate().map(|(i, v)| v + 0.05 * (i as f64 * 0.01).sin()).collect(), 44_100).unwrap();
    let (full, sub) = (StftLossConfig::fullband(), StftLossConfig::subband());
    let (xs, ys) = (split(&x), split(&y));
    let total = combined_sp_loss(&x, &y, &xs, &ys, &full, &sub).unwrap();
    let f = multi_resolution_stft_loss(&x, &y, &full).unwrap();
    let mut per_band = 0.0;
    for (a, b) in xs.bands.iter().zip(&ys.bands) {
        let rate = xs.band_rate();
        per_band += multi_resolution_stft_loss(
            &AudioBuffer::new(a.clone(), rate).unwrap(),
            &AudioBuffer::new(b.clone(), rate).unwrap(),
            &sub,
        )
        .unwrap();
    }
    let want = f + per_band / 5.0;
    assert!((total - want).abs() < 1e-12, "{total} vs {want}");
}

#[test]
fn one_corrupted_band_contributes_a_fifth() {
    let y = noise(4, 44_100);
    let ys = split(&y);
    let mut xs = ys.clone();
    let junk = noise(5, xs.band_len());
    xs.bands[3] = junk.samples().to_vec();
    let sub = StftLossConfig::subband();
    let total = subband_loss(&xs, &ys, &sub).unwrap();
    let rate = ys.band_rate();
    let band = multi_resolution_stft_loss(
        &AudioBuffer::new(xs.bands[3].clone(), rate).unwrap(),
        &AudioBuffer::new(ys.bands[3].clone(), rate).unwrap(),
        &sub,
    )
    .unwrap();
    assert!(band > 0.0);
    assert!((total - band / 5.0).abs() < 1e-12);
}
