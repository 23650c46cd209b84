use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature::FeatureVector;
use crate::ingest::SensorSample;
use crate::scalar::Real;

/// Algorithm used for the Fourier transform. Both compute the same DFT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// Mixed-radix fast transform.
    Fft,
    /// Direct O(N²) evaluation of the exponential sum.
    Dft,
}

impl Transform {
    pub fn name(self) -> &'static str {
        match self {
            Transform::Fft => "fft",
            Transform::Dft => "dft",
        }
    }
}

pub fn fft<T: Real>(series: &[T]) -> Vec<Complex<T>> {
    let mut buf: Vec<Complex<T>> = series.iter().map(|&x| Complex::new(x, T::zero())).collect();
    T::fft_in_place(&mut buf);
    buf
}

pub fn dft<T: Real>(series: &[T]) -> Vec<Complex<T>> {
    let n = series.len();
    let tau = T::TAU() / T::from_usize_lossy(n.max(1));
    (0..n)
        .map(|k| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (t, &x) in series.iter().enumerate() {
                // reduce k*t mod n before scaling to keep the angle small
                let angle = tau * T::from_usize_lossy((k * t) % n);
                acc += Complex::new(x * angle.cos(), -x * angle.sin());
            }
            acc
        })
        .collect()
}

/// `|X_k|` for every bin of the full transform.
pub fn magnitude_spectrum<T: Real>(series: &[T], transform: Transform) -> Vec<T> {
    let spec = match transform {
        Transform::Fft => fft(series),
        Transform::Dft => dft(series),
    };
    spec.into_iter().map(|c| c.norm()).collect()
}

/// Mean magnitude in `n_bands` contiguous bands of the one-sided spectrum
/// (`floor(N/2) + 1` bins), per axis.
///
/// Band `i` covers bins `[round(i L / n), round((i + 1) L / n))`. An empty
/// band (only possible when `L < n_bands`) contributes 0.
pub fn spectrum_bands<T: Real>(
    sample: &SensorSample<T>,
    n_bands: usize,
    transform: Transform,
) -> Result<FeatureVector<T>> {
    if n_bands == 0 {
        return Err(Error::InvalidParameter("n_bands must be positive".into()));
    }
    if sample.len() < n_bands {
        return Err(Error::Length {
            required: n_bands,
            actual: sample.len(),
        });
    }
    let mut values = Vec::with_capacity(3 * n_bands);
    for axis in sample.axes() {
        let mags = magnitude_spectrum(axis, transform);
        let one_sided = &mags[..axis.len() / 2 + 1];
        values.extend(band_means(one_sided, n_bands));
    }
    FeatureVector::new(format!("{}bands{n_bands}", transform.name()), values)
}

fn band_means<T: Real>(mags: &[T], n_bands: usize) -> Vec<T> {
    let len = mags.len();
    let edge = |i: usize| ((i * len) as f64 / n_bands as f64).round() as usize;
    (0..n_bands)
        .map(|i| {
            let band = &mags[edge(i)..edge(i + 1).min(len)];
            if band.is_empty() {
                T::zero()
            } else {
                band.iter().copied().sum::<T>() / T::from_usize_lossy(band.len())
            }
        })
        .collect()
}
