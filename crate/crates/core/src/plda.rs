//! Simplified PLDA scoring with a diagonal between-class variance.
//!
//! A model maps a raw embedding `e` to `y = transform * (e - mean)`, a space in which
//! the within-class covariance is the identity and the between-class covariance is
//! `diag(psi)`. Prepared embeddings are then length-normalised to `sqrt(D)`.
//!
//! Scoring treats one side as a single-cut enrollment. Per dimension, with
//! `a = psi / (psi + 1)`:
//!
//! ```text
//! same speaker:      test ~ N(a * enroll, 1 + a)
//! different speaker: test ~ N(0, 1 + psi)
//! ```
//!
//! and the score is the sum over dimensions of the log-likelihood ratio.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embeddings::Embedding;

#[derive(Debug, thiserror::Error)]
pub enum PldaError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("inconsistent model dimensions: {0}")]
    Shape(String),
    #[error("psi[{index}] = {value} is not a finite non-negative number")]
    BadPsi { index: usize, value: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("transform is singular (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("dimension mismatch: model has {expected}, input has {found}")]
    Dimension { expected: usize, found: usize },
    #[error("embedding coincides with the model mean; cannot length-normalise")]
    ZeroVector,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    dim: usize,
    mean: Vec<f64>,
    transform: Vec<Vec<f64>>,
    psi: Vec<f64>,
}

/// A validated PLDA model. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PldaModel {
    dim: usize,
    mean: Vec<f64>,
    /// Row-major `dim x dim`.
    transform: Vec<f64>,
    psi: Vec<f64>,
}

impl PldaModel {
    pub fn new(mean: Vec<f64>, transform: Vec<Vec<f64>>, psi: Vec<f64>) -> Result<Self, PldaError> {
        let dim = mean.len();
        if dim == 0 {
            return Err(PldaError::Shape("zero dimension".into()));
        }
        if psi.len() != dim {
            return Err(PldaError::Shape(format!("psi has {} entries, mean has {dim}", psi.len())));
        }
        if transform.len() != dim {
            return Err(PldaError::Shape(format!("transform has {} rows, expected {dim}", transform.len())));
        }
        if let Some((i, row)) = transform.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(PldaError::Shape(format!("transform row {i} has {} columns, expected {dim}", row.len())));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(PldaError::NonFinite("mean"));
        }
        if let Some((index, &value)) = psi.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
            return Err(PldaError::BadPsi { index, value });
        }
        let flat: Vec<f64> = transform.into_iter().flatten().collect();
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(PldaError::NonFinite("transform"));
        }
        check_full_rank(&flat, dim)?;
        Ok(Self {
            dim,
            mean,
            transform: flat,
            psi,
        })
    }

    /// Identity transform, zero mean.
    pub fn diagonal(psi: Vec<f64>) -> Result<Self, PldaError> {
        let dim = psi.len();
        let transform = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(vec![0.0; dim], transform, psi)
    }

    pub fn from_json_str(text: &str) -> Result<Self, PldaError> {
        let f: ModelFile = serde_json::from_str(text)?;
        if f.dim != f.mean.len() {
            return Err(PldaError::Shape(format!("dim = {} but mean has {} entries", f.dim, f.mean.len())));
        }
        Self::new(f.mean, f.transform, f.psi)
    }

    pub fn to_json_string(&self) -> String {
        let f = ModelFile {
            dim: self.dim,
            mean: self.mean.clone(),
            transform: self.transform.chunks(self.dim).map(<[f64]>::to_vec).collect(),
            psi: self.psi.clone(),
        };
        serde_json::to_string(&f).expect("model serialises")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// Centres, transforms and length-normalises an embedding.
    pub fn prepare(&self, e: &Embedding) -> Result<PreparedEmbedding, PldaError> {
        let x = e.as_slice();
        if x.len() != self.dim {
            return Err(PldaError::Dimension {
                expected: self.dim,
                found: x.len(),
            });
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(v, m)| v - m).collect();
        let mut y: Vec<f64> = self
            .transform
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(&centered).map(|(a, b)| a * b).sum())
            .collect();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(PldaError::ZeroVector);
        }
        let scale = (self.dim as f64).sqrt() / norm;
        y.iter_mut().for_each(|v| *v *= scale);
        Ok(PreparedEmbedding(y))
    }

    /// Log-likelihood ratio of same vs. different speaker.
    pub fn score(&self, enroll: &PreparedEmbedding, test: &PreparedEmbedding) -> Result<f64, PldaError> {
        for p in [enroll, test] {
            if p.0.len() != self.dim {
                return Err(PldaError::Dimension {
                    expected: self.dim,
                    found: p.0.len(),
                });
            }
        }
        Ok(self
            .psi
            .iter()
            .zip(enroll.0.iter().zip(&test.0))
            .map(|(&psi, (&e, &t))| dimension_llr(psi, e, t))
            .sum())
    }
}

pub fn load_plda(path: &Path) -> Result<PldaModel, PldaError> {
    PldaModel::from_json_str(&fs::read_to_string(path)?)
}

/// Free-function form of [`PldaModel::score`].
pub fn plda_score(model: &PldaModel, enroll: &PreparedEmbedding, test: &PreparedEmbedding) -> Result<f64, PldaError> {
    model.score(enroll, test)
}

/// Per-dimension log-likelihood ratio for between-class variance `psi`.
pub fn dimension_llr(psi: f64, enroll: f64, test: f64) -> f64 {
    let a = psi / (psi + 1.0);
    let same_var = 1.0 + a;
    let diff_var = 1.0 + psi;
    let r = test - a * enroll;
    0.5 * (diff_var.ln() - same_var.ln()) - r * r / (2.0 * same_var) + test * test / (2.0 * diff_var)
}

/// An embedding in the model's whitened, length-normalised space.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedEmbedding(Vec<f64>);

impl PreparedEmbedding {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn check_full_rank(flat: &[f64], dim: usize) -> Result<(), PldaError> {
    let mut m = flat.to_vec();
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    for col in 0..dim {
        let (piv_row, piv) = (col..dim)
            .map(|r| (r, m[r * dim + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv <= tol {
            return Err(PldaError::Singular { column: col, pivot: piv });
        }
        if piv_row != col {
            for j in 0..dim {
                m.swap(col * dim + j, piv_row * dim + j);
            }
        }
        let p = m[col * dim + col];
        for r in col + 1..dim {
            let f = m[r * dim + col] / p;
            if f != 0.0 {
                for j in col..dim {
                    m[r * dim + j] -= f * m[col * dim + j];
                }
            }
        }
    }
    Ok(())
}
