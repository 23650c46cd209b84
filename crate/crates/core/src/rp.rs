//! Recurrence plots of delay-embedded series and their three axis fusions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{RpImage, RpVariant};
use crate::ingest::SensorSample;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// Small distances (recurrences) are dark.
    #[default]
    DarkRecurrent,
    /// Small distances (recurrences) are bright.
    LightRecurrent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpConfig {
    /// Embedding dimension.
    pub m: usize,
    /// Embedding delay in samples.
    pub d: usize,
    /// Recurrence threshold. `None` renders the unthresholded distance plot.
    pub epsilon: Option<f64>,
    pub polarity: Polarity,
}

impl Default for RpConfig {
    fn default() -> Self {
        Self {
            m: 2,
            d: 2,
            epsilon: None,
            polarity: Polarity::DarkRecurrent,
        }
    }
}

impl RpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.d == 0 {
            return Err(Error::InvalidParameter(format!(
                "embedding needs m >= 1 and d >= 1, got m={} d={}",
                self.m, self.d
            )));
        }
        if let Some(eps) = self.epsilon {
            if !(eps >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "epsilon must be non-negative, got {eps}"
                )));
            }
        }
        Ok(())
    }

    /// Shortest series the embedding accepts.
    pub fn min_length(&self) -> usize {
        (self.m - 1) * self.d + 1
    }

    /// Side of the square plot produced from a series of length `n`.
    pub fn plot_side(&self, n: usize) -> Option<usize> {
        n.checked_sub((self.m - 1) * self.d)
            .filter(|&e| e >= 1)
    }
}

/// Delay embedding: point `i` is `(s[i], s[i+d], ..., s[i+(m-1)d])`.
pub fn embed<T: Real>(series: &[T], m: usize, d: usize) -> Result<Vec<Vec<T>>> {
    if m == 0 || d == 0 {
        return Err(Error::InvalidParameter(format!(
            "embedding needs m >= 1 and d >= 1, got m={m} d={d}"
        )));
    }
    let span = (m - 1) * d;
    if series.len() < span + 1 {
        return Err(Error::Length {
            required: span + 1,
            actual: series.len(),
        });
    }
    Ok((0..series.len() - span)
        .map(|i| (0..m).map(|k| series[i + k * d]).collect())
        .collect())
}

/// Dense square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    size: usize,
    data: Vec<T>,
}

impl<T: Real> SquareMatrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let size = rows.len();
        let mut data = Vec::with_capacity(size * size);
        for row in rows {
            if row.len() != size {
                return Err(Error::Dimension {
                    expected: size,
                    actual: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self { size, data })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.size + j]
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn max(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }
}

/// Pairwise Euclidean distances between embedded points.
pub fn distance_matrix<T: Real>(points: &[Vec<T>]) -> SquareMatrix<T> {
    let n = points.len();
    let mut data = vec![T::zero(); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let sq: T = points[i]
                .iter()
                .zip(&points[j])
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            let dist = sq.sqrt();
            data[i * n + j] = dist;
            data[j * n + i] = dist;
        }
    }
    SquareMatrix { size: n, data }
}

/// Binary recurrence matrix: 1 where the distance is at most `epsilon`.
pub fn apply_threshold<T: Real>(distances: &SquareMatrix<T>, epsilon: T) -> SquareMatrix<T> {
    SquareMatrix {
        size: distances.size,
        data: distances
            .data
            .iter()
            .map(|&v| if v <= epsilon { T::one() } else { T::zero() })
            .collect(),
    }
}

/// What a matrix handed to the renderer contains.
#[derive(Debug, Clone, PartialEq)]
pub enum PlotMatrix<T> {
    /// Distances: 0 means recurrent.
    Distance(SquareMatrix<T>),
    /// Thresholded indicator: 1 means recurrent.
    Recurrence(SquareMatrix<T>),
}

impl<T: Real> PlotMatrix<T> {
    pub fn size(&self) -> usize {
        match self {
            PlotMatrix::Distance(m) | PlotMatrix::Recurrence(m) => m.size,
        }
    }
}

/// Min-max normalizes a plot to one 8-bit plane.
///
/// With `DarkRecurrent`, recurrent cells (distance 0, or indicator 1) map to
/// 0. A constant matrix renders as all zeros.
pub fn render_plane<T: Real>(matrix: &PlotMatrix<T>, polarity: Polarity) -> Vec<u8> {
    let (m, invert_source) = match matrix {
        PlotMatrix::Distance(m) => (m, false),
        PlotMatrix::Recurrence(m) => (m, true),
    };
    let (lo, hi) = m
        .data
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    let full = T::lit(255.0);
    m.data
        .iter()
        .map(|&v| {
            if !(range > T::zero()) {
                return 0;
            }
            let mut level = (v - lo) / range;
            if invert_source {
                level = T::one() - level;
            }
            if polarity == Polarity::LightRecurrent {
                level = T::one() - level;
            }
            (level * full).round().to_u8().unwrap_or(255)
        })
        .collect()
}

/// Renders a single plot as a one-channel square image.
pub fn render_gray<T: Real>(matrix: &PlotMatrix<T>, polarity: Polarity) -> Result<RpImage> {
    let side = matrix.size();
    if side == 0 {
        return Err(Error::Empty("plot matrix is empty".into()));
    }
    RpImage::from_planes(side, side, vec![render_plane(matrix, polarity)], RpVariant::Gray)
}

/// Embed, measure and optionally threshold one series.
pub fn plot_matrix<T: Real>(series: &[T], cfg: &RpConfig) -> Result<PlotMatrix<T>> {
    cfg.validate()?;
    let points = embed(series, cfg.m, cfg.d)?;
    let distances = distance_matrix(&points);
    Ok(match cfg.epsilon {
        None => PlotMatrix::Distance(distances),
        Some(eps) => PlotMatrix::Recurrence(apply_threshold(&distances, T::lit(eps))),
    })
}

/// Gray plot of a single axis.
pub fn rp_axis<T: Real>(sample: &SensorSample<T>, axis: usize, cfg: &RpConfig) -> Result<RpImage> {
    render_gray(&plot_matrix(sample.axis(axis), cfg)?, cfg.polarity)
}

/// Plot of the per-timestep vector norm.
pub fn rp_gray<T: Real>(sample: &SensorSample<T>, cfg: &RpConfig) -> Result<RpImage> {
    render_gray(&plot_matrix(&sample.magnitude(), cfg)?, cfg.polarity)
}

/// Per-axis plots side by side: `3E x E`.
pub fn rp_gray_concat<T: Real>(sample: &SensorSample<T>, cfg: &RpConfig) -> Result<RpImage> {
    let planes = axis_planes(sample, cfg)?;
    let side = cfg.plot_side(sample.len()).expect("embedding succeeded");
    let mut tiled = Vec::with_capacity(3 * side * side);
    for row in 0..side {
        for plane in &planes {
            tiled.extend_from_slice(&plane[row * side..(row + 1) * side]);
        }
    }
    RpImage::from_planes(3 * side, side, vec![tiled], RpVariant::GrayConcat)
}

/// Per-axis plots as R, G, B channels.
pub fn rp_rgb<T: Real>(sample: &SensorSample<T>, cfg: &RpConfig) -> Result<RpImage> {
    let planes = axis_planes(sample, cfg)?;
    let side = cfg.plot_side(sample.len()).expect("embedding succeeded");
    RpImage::from_planes(side, side, planes.to_vec(), RpVariant::Rgb)
}

pub fn render_variant<T: Real>(
    sample: &SensorSample<T>,
    variant: RpVariant,
    cfg: &RpConfig,
) -> Result<RpImage> {
    match variant {
        RpVariant::Gray => rp_gray(sample, cfg),
        RpVariant::GrayConcat => rp_gray_concat(sample, cfg),
        RpVariant::Rgb => rp_rgb(sample, cfg),
    }
}

fn axis_planes<T: Real>(sample: &SensorSample<T>, cfg: &RpConfig) -> Result<[Vec<u8>; 3]> {
    let mut planes: [Vec<u8>; 3] = Default::default();
    for (axis, plane) in planes.iter_mut().enumerate() {
        *plane = render_plane(&plot_matrix(sample.axis(axis), cfg)?, cfg.polarity);
    }
    Ok(planes)
}
