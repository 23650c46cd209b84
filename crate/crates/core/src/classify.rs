//! One-vs-rest linear SVM.
//!
//! Each binary problem minimizes `½‖w‖² + C Σ max(0, 1 - y (w·x + b))` with the
//! bias folded in as a constant feature of value 1, solved in the dual by
//! cyclic coordinate descent over a seeded random permutation of the
//! training points (Hsieh et al., ICML 2008).

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Hinge-loss weight.
    pub c: f64,
    /// Maximum passes over the training set.
    pub epochs: usize,
    pub seed: u64,
    /// Stop when the spread of projected gradients in a pass drops below this.
    pub tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            epochs: 100,
            seed: 0,
            tolerance: 1e-4,
        }
    }
}

/// Per-dimension z-scoring fitted on training vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Standardizer<T: Real = f64> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Real> Standardizer<T> {
    /// Population mean and standard deviation; a constant dimension keeps scale 1.
    pub fn fit(features: &[Vec<T>]) -> Result<Self> {
        let dim = uniform_dim(features)?;
        let n = T::from_usize_lossy(features.len());
        let mut mean = vec![T::zero(); dim];
        for f in features {
            for (m, &v) in mean.iter_mut().zip(f) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![T::zero(); dim];
        for f in features {
            for ((s, &v), &m) in var.iter_mut().zip(f).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > T::zero() {
                    sd
                } else {
                    T::one()
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((&v, &m), &s)| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LinearModel<T: Real = f64> {
    pub version: u32,
    pub classes: Vec<String>,
    pub weights: Vec<Vec<T>>,
    pub biases: Vec<T>,
    pub config: TrainConfig,
    pub standardizer: Option<Standardizer<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub class: usize,
    pub scores: Vec<T>,
}

fn uniform_dim<T>(features: &[Vec<T>]) -> Result<usize> {
    let dim = features
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::Empty("no training vectors".into()))?;
    if let Some(f) = features.iter().find(|f| f.len() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            actual: f.len(),
        });
    }
    Ok(dim)
}

/// Trains one binary problem; `positive[i]` marks the +1 points.
fn train_binary<T: Real>(xs: &[Vec<T>], positive: &[bool], cfg: &TrainConfig, seed: u64) -> (Vec<T>, T) {
    let dim = xs[0].len();
    let c = T::lit(cfg.c);
    let tol = T::lit(cfg.tolerance);
    let mut w = vec![T::zero(); dim];
    let mut b = T::zero();
    let mut alpha = vec![T::zero(); xs.len()];
    let q_diag: Vec<T> = xs
        .iter()
        .map(|x| x.iter().map(|&v| v * v).sum::<T>() + T::one())
        .collect();
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut pg_max, mut pg_min) = (T::neg_infinity(), T::infinity());
        for &i in &order {
            let y = if positive[i] { T::one() } else { -T::one() };
            let margin = xs[i].iter().zip(&w).map(|(&a, &b)| a * b).sum::<T>() + b;
            let g = y * margin - T::one();
            let pg = if alpha[i] == T::zero() {
                g.min(T::zero())
            } else if alpha[i] == c {
                g.max(T::zero())
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > T::lit(1e-12) {
                let old = alpha[i];
                alpha[i] = (old - g / q_diag[i]).max(T::zero()).min(c);
                let step = (alpha[i] - old) * y;
                for (wj, &xj) in w.iter_mut().zip(&xs[i]) {
                    *wj += step * xj;
                }
                b += step;
            }
        }
        if pg_max - pg_min < tol {
            break;
        }
    }
    (w, b)
}

/// Trains a one-vs-rest model. `labels[i]` names the class of `features[i]`;
/// the class list is the sorted set of labels.
pub fn train<T: Real>(
    features: &[Vec<T>],
    labels: &[String],
    cfg: &TrainConfig,
    standardizer: Option<Standardizer<T>>,
) -> Result<LinearModel<T>> {
    if features.len() != labels.len() {
        return Err(Error::Dimension {
            expected: features.len(),
            actual: labels.len(),
        });
    }
    uniform_dim(features)?;
    if !(cfg.c > 0.0) {
        return Err(Error::InvalidParameter(format!("C must be positive, got {}", cfg.c)));
    }
    let mut classes: Vec<String> = labels.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleClass(classes.len()));
    }
    let xs: Vec<Vec<T>> = match &standardizer {
        Some(s) => features.iter().map(|f| s.apply(f)).collect(),
        None => features.to_vec(),
    };
    let solved: Vec<(Vec<T>, T)> = classes
        .par_iter()
        .enumerate()
        .map(|(ci, class)| {
            let positive: Vec<bool> = labels.iter().map(|l| l == class).collect();
            train_binary(&xs, &positive, cfg, cfg.seed.wrapping_add(ci as u64))
        })
        .collect();
    let (weights, biases) = solved.into_iter().unzip();
    Ok(LinearModel {
        version: MODEL_VERSION,
        classes,
        weights,
        biases,
        config: *cfg,
        standardizer,
    })
}

impl<T: Real> LinearModel<T> {
    pub fn dim(&self) -> usize {
        self.weights[0].len()
    }

    /// Raw decision values, one per class.
    pub fn scores(&self, feature: &[T]) -> Result<Vec<T>> {
        if feature.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: feature.len(),
            });
        }
        let x = match &self.standardizer {
            Some(s) => s.apply(feature),
            None => feature.to_vec(),
        };
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, &b)| w.iter().zip(&x).map(|(&a, &v)| a * v).sum::<T>() + b)
            .collect())
    }

    /// Argmax class; ties go to the lowest class index.
    pub fn predict(&self, feature: &[T]) -> Result<Prediction<T>> {
        let scores = self.scores(feature)?;
        Ok(Prediction {
            class: argmax(&scores),
            scores,
        })
    }

    pub fn label(&self, class: usize) -> &str {
        &self.classes[class]
    }

    /// Mean binary hinge loss over all one-vs-rest problems.
    pub fn hinge_loss(&self, features: &[Vec<T>], labels: &[String]) -> Result<T> {
        let mut total = T::zero();
        for (f, l) in features.iter().zip(labels) {
            let s = self.scores(f)?;
            for (class, &score) in self.classes.iter().zip(&s) {
                let y = if class == l { T::one() } else { -T::one() };
                total += (T::one() - y * score).max(T::zero());
            }
        }
        Ok(total / T::from_usize_lossy(features.len() * self.classes.len()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self).map_err(|e| Error::format("model", e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Self =
            serde_json::from_str(&text).map_err(|e| Error::format("model", e.to_string()))?;
        if model.version != MODEL_VERSION {
            return Err(Error::format("model", format!("unsupported version {}", model.version)));
        }
        Ok(model)
    }
}

pub fn argmax<T: Real>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}
