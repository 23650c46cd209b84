//! Time- and frequency-domain features computed straight from the sensor axes.

mod spectrum;

use serde::{Deserialize, Serialize};

pub use spectrum::{dft, fft, magnitude_spectrum, spectrum_bands, Transform};

use crate::error::{Error, Result};
use crate::feature::FeatureVector;
use crate::ingest::SensorSample;
use crate::scalar::Real;

/// Number of quantile probabilities, equally spaced on [0, 1].
pub const QUANTILE_PROBS: usize = 21;
pub const HISTOGRAM_BINS: usize = 16;
pub const DEFAULT_BANDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeFeature {
    Mean,
    Std,
    Rms,
    Quantile,
    Histogram,
    Covariance,
}

/// Every baseline the evaluation protocol knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Time(TimeFeature),
    Bands(Transform),
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 8] = [
        BaselineKind::Time(TimeFeature::Mean),
        BaselineKind::Time(TimeFeature::Std),
        BaselineKind::Time(TimeFeature::Rms),
        BaselineKind::Time(TimeFeature::Quantile),
        BaselineKind::Time(TimeFeature::Histogram),
        BaselineKind::Time(TimeFeature::Covariance),
        BaselineKind::Bands(Transform::Fft),
        BaselineKind::Bands(Transform::Dft),
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Time(TimeFeature::Mean) => "mean",
            BaselineKind::Time(TimeFeature::Std) => "std",
            BaselineKind::Time(TimeFeature::Rms) => "rms",
            BaselineKind::Time(TimeFeature::Quantile) => "quantile",
            BaselineKind::Time(TimeFeature::Histogram) => "histogram",
            BaselineKind::Time(TimeFeature::Covariance) => "covariance",
            BaselineKind::Bands(Transform::Fft) => "fftbands",
            BaselineKind::Bands(Transform::Dft) => "dftbands",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn descriptor_id(self) -> String {
        match self {
            BaselineKind::Time(TimeFeature::Quantile) => format!("quantile{QUANTILE_PROBS}"),
            BaselineKind::Time(TimeFeature::Histogram) => format!("histogram{HISTOGRAM_BINS}"),
            BaselineKind::Bands(t) => format!("{}bands{DEFAULT_BANDS}", t.name()),
            other => other.name().to_string(),
        }
    }

    pub fn dim(self) -> usize {
        match self {
            BaselineKind::Time(TimeFeature::Quantile) => 3 * QUANTILE_PROBS,
            BaselineKind::Time(TimeFeature::Histogram) => 3 * HISTOGRAM_BINS,
            BaselineKind::Bands(_) => 3 * DEFAULT_BANDS,
            BaselineKind::Time(_) => 3,
        }
    }
}

/// Computes a baseline with its default parameters.
pub fn baseline_feature<T: Real>(
    sample: &SensorSample<T>,
    kind: BaselineKind,
) -> Result<FeatureVector<T>> {
    match kind {
        BaselineKind::Time(t) => time_feature(sample, t),
        BaselineKind::Bands(t) => spectrum_bands(sample, DEFAULT_BANDS, t),
    }
}

pub fn time_feature<T: Real>(
    sample: &SensorSample<T>,
    kind: TimeFeature,
) -> Result<FeatureVector<T>> {
    if sample.len() < 2 {
        return Err(Error::Length {
            required: 2,
            actual: sample.len(),
        });
    }
    let axes = sample.axes();
    let values: Vec<T> = match kind {
        TimeFeature::Mean => axes.iter().map(|a| mean(a)).collect(),
        TimeFeature::Std => axes.iter().map(|a| std_dev(a)).collect(),
        TimeFeature::Rms => axes.iter().map(|a| rms(a)).collect(),
        TimeFeature::Quantile => {
            let probs: Vec<T> = (0..QUANTILE_PROBS)
                .map(|i| T::from_usize_lossy(i) / T::from_usize_lossy(QUANTILE_PROBS - 1))
                .collect();
            axes.iter().flat_map(|a| quantiles(a, &probs)).collect()
        }
        TimeFeature::Histogram => axes
            .iter()
            .flat_map(|a| histogram(a, HISTOGRAM_BINS))
            .collect(),
        TimeFeature::Covariance => vec![
            pearson(&axes[0], &axes[1]),
            pearson(&axes[0], &axes[2]),
            pearson(&axes[1], &axes[2]),
        ],
    };
    FeatureVector::new(BaselineKind::Time(kind).descriptor_id(), values)
}

pub fn mean<T: Real>(xs: &[T]) -> T {
    xs.iter().copied().sum::<T>() / T::from_usize_lossy(xs.len())
}

/// Sample standard deviation (n - 1 denominator).
pub fn std_dev<T: Real>(xs: &[T]) -> T {
    let m = mean(xs);
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    (ss / T::from_usize_lossy(xs.len() - 1)).sqrt()
}

pub fn rms<T: Real>(xs: &[T]) -> T {
    (xs.iter().map(|&x| x * x).sum::<T>() / T::from_usize_lossy(xs.len())).sqrt()
}

/// Quantiles by linear interpolation between order statistics
/// (position `(n - 1) p`).
pub fn quantiles<T: Real>(xs: &[T], probs: &[T]) -> Vec<T> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite sensor values"));
    let last = sorted.len() - 1;
    probs
        .iter()
        .map(|&p| {
            let h = T::from_usize_lossy(last) * p;
            let lo = h.floor().to_usize().unwrap_or(0).min(last);
            let hi = (lo + 1).min(last);
            let frac = h - T::from_usize_lossy(lo);
            sorted[lo] + frac * (sorted[hi] - sorted[lo])
        })
        .collect()
}

/// Equal-width histogram over `[min, max]` of `xs`, as frequencies.
/// The top edge belongs to the last bin; a constant series fills bin 0.
pub fn histogram<T: Real>(xs: &[T], bins: usize) -> Vec<T> {
    let (lo, hi) = xs
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let mut counts = vec![0usize; bins];
    let range = hi - lo;
    for &v in xs {
        let bin = if range > T::zero() {
            ((v - lo) / range * T::from_usize_lossy(bins))
                .floor()
                .to_usize()
                .unwrap_or(0)
                .min(bins - 1)
        } else {
            0
        };
        counts[bin] += 1;
    }
    let n = T::from_usize_lossy(xs.len());
    counts
        .into_iter()
        .map(|c| T::from_usize_lossy(c) / n)
        .collect()
}

/// Pearson correlation; 0 when either series has zero variance.
pub fn pearson<T: Real>(a: &[T], b: &[T]) -> T {
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= T::zero() || sbb <= T::zero() {
        return T::zero();
    }
    (sab / (saa.sqrt() * sbb.sqrt())).max(-T::one()).min(T::one())
}
