use proptest::prelude::*;
use voxsel_core::embeddings::Embedding;
use voxsel_core::plda::{dimension_llr, load_plda, plda_score, PldaModel};

fn emb(v: Vec<f64>) -> Embedding {
    Embedding::new(v).unwrap()
}

fn nonzero_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, dim).prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
}

fn model_and_pair() -> impl Strategy<Value = (PldaModel, Vec<f64>, Vec<f64>)> {
    (1usize..8).prop_flat_map(|d| {
        (
            prop::collection::vec(0.0f64..4.0, d),
            prop::collection::vec(-0.5f64..0.5, d),
            nonzero_vec(d),
            nonzero_vec(d),
        )
            .prop_filter_map("embeddings must stay off the mean", |(psi, mean, a, b)| {
                let ca: f64 = a.iter().zip(&mean).map(|(x, m)| (x - m) * (x - m)).sum();
                let cb: f64 = b.iter().zip(&mean).map(|(x, m)| (x - m) * (x - m)).sum();
                if ca < 1e-3 || cb < 1e-3 {
                    return None;
                }
                let d = psi.len();
                let eye: Vec<Vec<f64>> = (0..d)
                    .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.1 * ((i + 2 * j) % 3) as f64 }).collect())
                    .collect();
                PldaModel::new(mean, eye, psi).ok().map(|m| (m, a, b))
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn score_is_symmetric((model, a, b) in model_and_pair()) {
        let (pa, pb) = (model.prepare(&emb(a)).unwrap(), model.prepare(&emb(b)).unwrap());
        let ab = plda_score(&model, &pa, &pb).unwrap();
        let ba = plda_score(&model, &pb, &pa).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-9 * (1.0 + ab.abs()));
    }

    #[test]
    fn self_beats_anti((model, a, _b) in model_and_pair()) {
        // with a zero mean the negated embedding is the exact antipode after projection
        let psi = model.psi().to_vec();
        prop_assume!(psi.iter().any(|&p| p > 0.0));
        let m = PldaModel::diagonal(psi).unwrap();
        let e = m.prepare(&emb(a.clone())).unwrap();
        let neg = m.prepare(&emb(a.iter().map(|x| -x).collect())).unwrap();
        prop_assert!(m.score(&e, &e).unwrap() >= m.score(&e, &neg).unwrap());
    }

    #[test]
    fn dimension_permutation_invariance(
        psi in prop::collection::vec(0.0f64..4.0, 5),
        a in nonzero_vec(5),
        b in nonzero_vec(5),
        perm in Just((0..5).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let mean = [0.1, -0.2, 0.05, 0.0, 0.3];
        let t: Vec<Vec<f64>> = (0..5).map(|i| (0..5).map(|j| if i == j { 2.0 } else { 0.2 * (i as f64 - j as f64) }).collect()).collect();
        let Ok(model) = PldaModel::new(mean.to_vec(), t.clone(), psi.clone()) else { return Ok(()); };
        let p = |v: &[f64]| perm.iter().map(|&i| v[i]).collect::<Vec<f64>>();
        let tp: Vec<Vec<f64>> = perm.iter().map(|&i| perm.iter().map(|&j| t[i][j]).collect()).collect();
        let permuted = PldaModel::new(p(&mean), tp, p(&psi)).unwrap();
        let (Ok(ea), Ok(eb)) = (model.prepare(&emb(a.clone())), model.prepare(&emb(b.clone()))) else { return Ok(()); };
        let s1 = model.score(&ea, &eb).unwrap();
        let s2 = permuted.score(&permuted.prepare(&emb(p(&a))).unwrap(), &permuted.prepare(&emb(p(&b))).unwrap()).unwrap();
        prop_assert!((s1 - s2).abs() <= 1e-9 * (1.0 + s1.abs()));
    }

    #[test]
    fn zero_psi_scores_zero(a in nonzero_vec(6), b in nonzero_vec(6)) {
        let m = PldaModel::diagonal(vec![0.0; 6]).unwrap();
        let s = m.score(&m.prepare(&emb(a)).unwrap(), &m.prepare(&emb(b)).unwrap()).unwrap();
        prop_assert_eq!(s, 0.0);
    }
}

/// `log N(t | a e, 1 + a)`, `a = psi / (psi + 1)`, against `log N(t | 0, 1 + psi)`, written out longhand.
fn closed_form(psi: f64, e: f64, t: f64) -> f64 {
    let a = psi / (psi + 1.0);
    let vs = 1.0 + a;
    let vd = 1.0 + psi;
    0.5 * (vd / vs).ln() - 0.5 * (t - a * e).powi(2) / vs + 0.5 * t * t / vd
}

#[test]
fn per_dimension_formula() {
    for &(psi, e, t) in &[(1.0, 1.0, 1.0), (0.3, -2.0, 0.5), (3.9, 2.5, 2.4), (0.0, 1.0, -1.0)] {
        let got = dimension_llr(psi, e, t);
        assert!((got - closed_form(psi, e, t)).abs() < 1e-13, "{psi} {e} {t}");
    }
}

#[test]
fn one_dimensional_model_reduces_to_the_per_dimension_llr() {
    // length normalisation to sqrt(1) maps positive inputs to exactly 1
    let m = PldaModel::diagonal(vec![1.0]).unwrap();
    let e = m.prepare(&emb(vec![3.0])).unwrap();
    assert_eq!(e.as_slice(), &[1.0]);
    assert_eq!(m.score(&e, &e).unwrap(), dimension_llr(1.0, 1.0, 1.0));
}

#[test]
fn model_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("plda.json");
    let m = PldaModel::new(vec![0.5, -1.0], vec![vec![1.0, 0.5], vec![0.0, 2.0]], vec![1.5, 0.25]).unwrap();
    std::fs::write(&p, m.to_json_string()).unwrap();
    assert_eq!(load_plda(&p).unwrap(), m);

    std::fs::write(&p, r#"{"dim": 2, "mean": [0, 0], "transform": [[1, 0]], "psi": [1, 1]}"#).unwrap();
    let err = load_plda(&p).unwrap_err().to_string();
    assert!(!err.is_empty());
    let e3 = emb(vec![1.0, 2.0, 3.0]);
    assert!(m.prepare(&e3).is_err());
}
