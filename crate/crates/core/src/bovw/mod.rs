//! Bags of visual words: codebooks, hard/soft assignment and (spatial) pooling.

mod codebook;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use codebook::{build_codebook, Codebook};

use crate::descriptors::LocalDescriptorSet;
use crate::error::{Error, Result};
use crate::feature::FeatureVector;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Assignment {
    /// One-hot at the nearest word.
    Hard,
    /// Codeword uncertainty with a Gaussian kernel of width `sigma`.
    Soft { sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Pooling {
    Average,
    Max,
    /// Max pooling inside every cell of a `g`×`g` grid for each `g` in `levels`.
    MaxSpm { levels: Vec<usize> },
}

impl Pooling {
    pub fn max_spm() -> Self {
        Pooling::MaxSpm {
            levels: vec![1, 2, 4],
        }
    }

    /// Output length for a codebook of `k` words.
    pub fn output_dim(&self, k: usize) -> usize {
        match self {
            Pooling::Average | Pooling::Max => k,
            Pooling::MaxSpm { levels } => levels.iter().map(|g| g * g).sum::<usize>() * k,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Pooling::Average => "avg".into(),
            Pooling::Max => "max".into(),
            Pooling::MaxSpm { levels } => {
                let l: Vec<String> = levels.iter().map(|g| g.to_string()).collect();
                format!("maxspm{}", l.join("-"))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BovwConfig {
    pub assignment: Assignment,
    pub pooling: Pooling,
}

impl Default for BovwConfig {
    fn default() -> Self {
        Self {
            assignment: Assignment::Soft { sigma: 150.0 },
            pooling: Pooling::max_spm(),
        }
    }
}

impl BovwConfig {
    pub fn validate(&self) -> Result<()> {
        if let Assignment::Soft { sigma } = self.assignment {
            if !(sigma > 0.0) || !sigma.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "soft assignment needs sigma > 0, got {sigma}"
                )));
            }
        }
        if let Pooling::MaxSpm { levels } = &self.pooling {
            if levels.is_empty() || levels.contains(&0) {
                return Err(Error::InvalidParameter(format!(
                    "pyramid levels must be non-empty and positive, got {levels:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        let a = match self.assignment {
            Assignment::Hard => "hard".to_string(),
            Assignment::Soft { sigma } => format!("soft{sigma}"),
        };
        format!("{a}/{}", self.pooling.name())
    }
}

fn squared_distances<T: Real>(descriptor: &[T], codebook: &Codebook<T>) -> Vec<T> {
    codebook
        .words()
        .map(|w| {
            descriptor
                .iter()
                .zip(w)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum()
        })
        .collect()
}

fn nearest<T: Real>(sq: &[T]) -> usize {
    let mut best = 0;
    for (j, &d) in sq.iter().enumerate().skip(1) {
        if d < sq[best] {
            best = j;
        }
    }
    best
}

/// Weights of `descriptor` over the codebook words.
///
/// Soft weights are `K(‖x - w_j‖) / Σ_l K(‖x - w_l‖)` with
/// `K(t) = exp(-t² / 2σ²)`, evaluated relative to the nearest word so the
/// largest kernel is exactly 1. Ties in hard assignment go to the lowest index.
pub fn assign<T: Real>(
    descriptor: &[T],
    codebook: &Codebook<T>,
    assignment: Assignment,
) -> Result<Vec<T>> {
    if descriptor.len() != codebook.dim() {
        return Err(Error::Dimension {
            expected: codebook.dim(),
            actual: descriptor.len(),
        });
    }
    let sq = squared_distances(descriptor, codebook);
    let best = nearest(&sq);
    let one_hot = || {
        let mut w = vec![T::zero(); sq.len()];
        w[best] = T::one();
        w
    };
    match assignment {
        Assignment::Hard => Ok(one_hot()),
        Assignment::Soft { sigma } => {
            let sigma = T::lit(sigma);
            let denom = T::lit(2.0) * sigma * sigma;
            let floor = sq[best];
            let kernels: Vec<T> = sq.iter().map(|&d| (-(d - floor) / denom).exp()).collect();
            let total: T = kernels.iter().copied().sum();
            if !(total > T::zero()) || !total.is_finite() {
                return Ok(one_hot());
            }
            Ok(kernels.into_iter().map(|v| v / total).collect())
        }
    }
}

/// Pools per-point weight vectors into one image vector.
///
/// For `MaxSpm`, a point at `(x, y)` belongs to cell
/// `(min(⌊g x / width⌋, g - 1), min(⌊g y / height⌋, g - 1))`; cells are
/// emitted level by level in row-major order and an empty cell yields zeros.
pub fn pool<T: Real>(
    assignments: &[Vec<T>],
    points: &[(usize, usize)],
    image_size: (usize, usize),
    pooling: &Pooling,
) -> Result<Vec<T>> {
    if assignments.is_empty() {
        return Err(Error::Empty("no descriptors to pool".into()));
    }
    if assignments.len() != points.len() {
        return Err(Error::Dimension {
            expected: points.len(),
            actual: assignments.len(),
        });
    }
    let k = assignments[0].len();
    if let Some(a) = assignments.iter().find(|a| a.len() != k) {
        return Err(Error::Dimension {
            expected: k,
            actual: a.len(),
        });
    }
    let (width, height) = image_size;
    if let Some(p) = points.iter().find(|p| p.0 >= width || p.1 >= height) {
        return Err(Error::InvalidParameter(format!(
            "point {p:?} outside {width}x{height} image"
        )));
    }
    let max_into = |acc: &mut [T], w: &[T]| {
        for (a, &v) in acc.iter_mut().zip(w) {
            if v > *a {
                *a = v;
            }
        }
    };
    match pooling {
        Pooling::Average => {
            let mut acc = vec![T::zero(); k];
            for w in assignments {
                for (a, &v) in acc.iter_mut().zip(w) {
                    *a += v;
                }
            }
            let n = T::from_usize_lossy(assignments.len());
            Ok(acc.into_iter().map(|v| v / n).collect())
        }
        Pooling::Max => {
            let mut acc = vec![T::zero(); k];
            assignments.iter().for_each(|w| max_into(&mut acc, w));
            Ok(acc)
        }
        Pooling::MaxSpm { levels } => {
            let mut out = Vec::with_capacity(pooling.output_dim(k));
            for &g in levels {
                let mut cells = vec![T::zero(); g * g * k];
                for (w, &(x, y)) in assignments.iter().zip(points) {
                    let cx = (g * x / width).min(g - 1);
                    let cy = (g * y / height).min(g - 1);
                    let cell = cy * g + cx;
                    max_into(&mut cells[cell * k..(cell + 1) * k], w);
                }
                out.extend(cells);
            }
            Ok(out)
        }
    }
}

/// Assigns every descriptor of one image and pools the result.
pub fn encode<T: Real>(
    set: &LocalDescriptorSet<T>,
    codebook: &Codebook<T>,
    cfg: &BovwConfig,
) -> Result<FeatureVector<T>> {
    cfg.validate()?;
    if set.kind != codebook.kind() {
        return Err(Error::KindMismatch {
            codebook: codebook.kind().name().into(),
            descriptors: set.kind.name().into(),
        });
    }
    let assignments = set
        .descriptors()
        .map(|d| assign(d, codebook, cfg.assignment))
        .collect::<Result<Vec<_>>>()?;
    let values = pool(&assignments, &set.points, set.image_size, &cfg.pooling)?;
    FeatureVector::new(
        format!("bovw/{}/k{}/{}", codebook.kind().name(), codebook.k(), cfg.name()),
        values,
    )
}

/// Parallel `encode` over many images, preserving order.
pub fn encode_all<T: Real>(
    sets: &[&LocalDescriptorSet<T>],
    codebook: &Codebook<T>,
    cfg: &BovwConfig,
) -> Result<Vec<FeatureVector<T>>> {
    sets.par_iter().map(|s| encode(s, codebook, cfg)).collect()
}
