//! Dense local descriptors sampled on a regular grid over plot images.

pub mod cache;
mod color;
mod sift;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use color::{opponent_planes, rgb_hist_window};
pub use sift::{sift_window, Plane, SIFT_DIM};

use crate::error::{Error, Result};
use crate::image::RpImage;
use crate::scalar::Real;

/// SIFT-family vectors are scaled by this factor and clamped to 255 before
/// codebook assignment, matching the usual byte quantization of SIFT.
pub const SIFT_SCALE: f64 = 512.0;
pub const SIFT_MAX: f64 = 255.0;
pub const DEFAULT_HIST_BINS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    pub stride: usize,
    pub patch: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            stride: 6,
            patch: 16,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.stride < 1 || self.patch < 4 {
            return Err(Error::InvalidParameter(format!(
                "grid needs stride >= 1 and patch >= 4, got stride={} patch={}",
                self.stride, self.patch
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptorKind {
    Sift,
    RgbSift,
    OpponentSift,
    RgbHist,
}

impl DescriptorKind {
    pub fn name(self) -> &'static str {
        match self {
            DescriptorKind::Sift => "sift",
            DescriptorKind::RgbSift => "rgb_sift",
            DescriptorKind::OpponentSift => "opponent_sift",
            DescriptorKind::RgbHist => "rgb_hist",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "sift" => Some(DescriptorKind::Sift),
            "rgb_sift" | "rgbsift" => Some(DescriptorKind::RgbSift),
            "opponent_sift" | "opponentsift" => Some(DescriptorKind::OpponentSift),
            "rgb_hist" | "rgb_histogram" | "rgbhist" => Some(DescriptorKind::RgbHist),
            _ => None,
        }
    }

    pub fn dim(self, hist_bins: usize) -> usize {
        match self {
            DescriptorKind::Sift => SIFT_DIM,
            DescriptorKind::RgbSift | DescriptorKind::OpponentSift => 3 * SIFT_DIM,
            DescriptorKind::RgbHist => hist_bins.pow(3),
        }
    }
}

/// Kind, grid and histogram resolution of a dense extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DescriptorSpec {
    pub kind: DescriptorKind,
    pub grid: GridSpec,
    pub hist_bins: usize,
}

impl DescriptorSpec {
    pub fn new(kind: DescriptorKind) -> Self {
        Self {
            kind,
            grid: GridSpec::default(),
            hist_bins: DEFAULT_HIST_BINS,
        }
    }

    pub fn dim(&self) -> usize {
        self.kind.dim(self.hist_bins)
    }
}

/// Descriptors of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDescriptorSet<T = f64> {
    pub image_size: (usize, usize),
    pub kind: DescriptorKind,
    pub dim: usize,
    /// Patch centres, row-major grid order.
    pub points: Vec<(usize, usize)>,
    /// `points.len() * dim` values, one row per point.
    pub values: Vec<T>,
}

impl<T: Real> LocalDescriptorSet<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn descriptor(&self, i: usize) -> &[T] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &[T]> {
        self.values.chunks_exact(self.dim.max(1))
    }
}

/// Patch centres of every `patch`×`patch` window that fits at `stride`
/// intervals, row-major. A centre is the top-left corner plus `patch / 2`.
pub fn dense_grid(image_size: (usize, usize), grid: &GridSpec) -> Result<Vec<(usize, usize)>> {
    grid.validate()?;
    let (width, height) = image_size;
    if width < grid.patch || height < grid.patch {
        return Err(Error::EmptyGrid {
            width,
            height,
            patch: grid.patch,
        });
    }
    let xs = (width - grid.patch) / grid.stride + 1;
    let ys = (height - grid.patch) / grid.stride + 1;
    let half = grid.patch / 2;
    Ok((0..ys)
        .flat_map(|j| (0..xs).map(move |i| (i * grid.stride + half, j * grid.stride + half)))
        .collect())
}

fn corner(center: (usize, usize), patch: usize) -> (usize, usize) {
    (center.0 - patch / 2, center.1 - patch / 2)
}

fn check_inside(image: &RpImage, center: (usize, usize), patch: usize) -> Result<(usize, usize)> {
    let half = patch / 2;
    if center.0 < half
        || center.1 < half
        || center.0 - half + patch > image.width()
        || center.1 - half + patch > image.height()
    {
        return Err(Error::InvalidParameter(format!(
            "patch {patch} at {center:?} leaves the {}x{} image",
            image.width(),
            image.height()
        )));
    }
    Ok(corner(center, patch))
}

/// Luminance plane: the channel itself for gray images, Rec. 601 weights for RGB.
pub fn gray_plane<T: Real>(image: &RpImage) -> Plane<T> {
    let (w, h) = (image.width(), image.height());
    if image.channels() == 1 {
        return Plane::from_u8(w, h, image.plane(0));
    }
    let (r, g, b) = (image.plane(0), image.plane(1), image.plane(2));
    let (kr, kg, kb) = (T::lit(0.299), T::lit(0.587), T::lit(0.114));
    let lit = |p: u8| T::from_usize_lossy(p as usize);
    Plane {
        width: w,
        height: h,
        data: (0..w * h)
            .map(|i| kr * lit(r[i]) + kg * lit(g[i]) + kb * lit(b[i]))
            .collect(),
    }
}

/// R, G, B planes; a gray image is replicated into all three.
pub fn rgb_planes<T: Real>(image: &RpImage) -> [Plane<T>; 3] {
    let (w, h) = (image.width(), image.height());
    let pick = |c: usize| Plane::from_u8(w, h, image.plane(c.min(image.channels() - 1)));
    [pick(0), pick(1), pick(2)]
}

/// Unit-norm 128-D SIFT of the luminance patch centred at `center`.
pub fn sift_at<T: Real>(image: &RpImage, center: (usize, usize), patch: usize) -> Result<Vec<T>> {
    let (x0, y0) = check_inside(image, center, patch)?;
    Ok(sift_window(&gray_plane::<T>(image), x0, y0, patch))
}

/// SIFT of R, G and B independently, concatenated.
pub fn rgb_sift_at<T: Real>(
    image: &RpImage,
    center: (usize, usize),
    patch: usize,
) -> Result<Vec<T>> {
    let (x0, y0) = check_inside(image, center, patch)?;
    Ok(rgb_planes::<T>(image)
        .iter()
        .flat_map(|p| sift_window(p, x0, y0, patch))
        .collect())
}

/// SIFT of the three opponent-colour channels, concatenated (O1, O2, O3).
pub fn opponent_sift_at<T: Real>(
    image: &RpImage,
    center: (usize, usize),
    patch: usize,
) -> Result<Vec<T>> {
    let (x0, y0) = check_inside(image, center, patch)?;
    Ok(opponent_planes::<T>(image)
        .iter()
        .flat_map(|p| sift_window(p, x0, y0, patch))
        .collect())
}

/// Joint colour histogram of the patch, L1-normalized.
pub fn rgb_hist_at<T: Real>(
    image: &RpImage,
    center: (usize, usize),
    patch: usize,
    bins_per_channel: usize,
) -> Result<Vec<T>> {
    let (x0, y0) = check_inside(image, center, patch)?;
    Ok(rgb_hist_window(image, x0, y0, patch, bins_per_channel))
}

/// Extracts descriptors on the dense grid of `image`.
///
/// SIFT-family vectors are returned in byte units (`min(512 v, 255)`); colour
/// histograms stay as frequencies.
pub fn extract<T: Real>(image: &RpImage, spec: &DescriptorSpec) -> Result<LocalDescriptorSet<T>> {
    let centers = dense_grid((image.width(), image.height()), &spec.grid)?;
    let patch = spec.grid.patch;
    let planes: Vec<Plane<T>> = match spec.kind {
        DescriptorKind::Sift => vec![gray_plane(image)],
        DescriptorKind::RgbSift => rgb_planes(image).into(),
        DescriptorKind::OpponentSift => opponent_planes(image).into(),
        DescriptorKind::RgbHist => Vec::new(),
    };
    let scale = T::lit(SIFT_SCALE);
    let cap = T::lit(SIFT_MAX);
    let rows: Vec<Vec<T>> = centers
        .par_iter()
        .map(|&c| {
            let (x0, y0) = corner(c, patch);
            if spec.kind == DescriptorKind::RgbHist {
                return rgb_hist_window(image, x0, y0, patch, spec.hist_bins);
            }
            planes
                .iter()
                .flat_map(|p| sift_window(p, x0, y0, patch))
                .map(|v| (v * scale).min(cap))
                .collect()
        })
        .collect();
    Ok(LocalDescriptorSet {
        image_size: (image.width(), image.height()),
        kind: spec.kind,
        dim: spec.dim(),
        points: centers,
        values: rows.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::RpVariant;
    use proptest::prelude::*;

    fn gray(w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> RpImage {
        let px = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        let variant = if w == h { RpVariant::Gray } else { RpVariant::GrayConcat };
        RpImage::from_planes(w, h, vec![px], variant).unwrap()
    }

    fn rgb(side: usize, f: impl Fn(usize, usize, usize) -> u8) -> RpImage {
        let planes = (0..3)
            .map(|c| {
                (0..side * side)
                    .map(|i| f(c, i % side, i / side))
                    .collect()
            })
            .collect();
        RpImage::from_planes(side, side, planes, RpVariant::Rgb).unwrap()
    }

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn grid_counts() {
        let g = GridSpec::default();
        assert_eq!(dense_grid((16, 16), &g).unwrap(), vec![(8, 8)]);
        assert_eq!(dense_grid((98, 98), &g).unwrap().len(), 196);
        assert_eq!(dense_grid((294, 98), &g).unwrap().len(), 47 * 14);
        assert!(matches!(dense_grid((15, 15), &g), Err(Error::EmptyGrid { .. })));
        let pts = dense_grid((28, 22), &g).unwrap();
        assert_eq!(pts, vec![(8, 8), (14, 8), (20, 8), (8, 14), (14, 14), (20, 14)]);
    }

    #[test]
    fn uniform_patch_is_zero() {
        let img = gray(20, 20, |_, _| 77);
        let d = sift_at::<f64>(&img, (8, 8), 16).unwrap();
        assert_eq!(d.len(), 128);
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vertical_edge_votes_horizontal_gradient() {
        let img = gray(16, 16, |x, _| if x < 8 { 20 } else { 200 });
        let d = sift_at::<f64>(&img, (8, 8), 16).unwrap();
        let mut per_bin = [0.0; 8];
        for (i, v) in d.iter().enumerate() {
            per_bin[i % 8] += v;
        }
        let argmax = (0..8).max_by(|&a, &b| per_bin[a].total_cmp(&per_bin[b])).unwrap();
        assert_eq!(argmax, 0);
        let total: f64 = per_bin.iter().sum();
        assert!(per_bin[0] / total > 0.99);
        // mirrored edge points the other way
        let img = gray(16, 16, |x, _| if x < 8 { 200 } else { 20 });
        let d = sift_at::<f64>(&img, (8, 8), 16).unwrap();
        let west: f64 = d.iter().skip(4).step_by(8).sum();
        assert!(west / d.iter().sum::<f64>() > 0.99);
    }

    #[test]
    fn window_only_sees_its_patch() {
        // flat inside the patch, busy outside it
        let img = gray(30, 30, |x, y| if (6..22).contains(&x) && (6..22).contains(&y) { 9 } else { ((x * 37 + y * 11) % 256) as u8 });
        let d = sift_at::<f64>(&img, (14, 14), 16).unwrap();
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rgb_sift_blocks() {
        let img = rgb(24, |_, x, y| ((x * 13 + y * 7) % 200) as u8);
        let d = rgb_sift_at::<f64>(&img, (12, 12), 16).unwrap();
        assert_eq!(d.len(), 384);
        assert_eq!(&d[..128], &d[128..256]);
        assert_eq!(&d[128..256], &d[256..]);
        let img = rgb(24, |c, x, y| if c == 0 { 50 } else { ((x * x + y * 3 * c) % 256) as u8 });
        let d = rgb_sift_at::<f64>(&img, (12, 12), 16).unwrap();
        assert!(d[..128].iter().all(|&v| v == 0.0));
        assert!((norm(&d[128..256]) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn opponent_sift_on_gray_content() {
        let img = rgb(24, |_, x, y| ((x * 5 + y * 9) % 256) as u8);
        let d = opponent_sift_at::<f64>(&img, (12, 12), 16).unwrap();
        assert_eq!(d.len(), 384);
        assert!(d[..256].iter().all(|&v| v == 0.0));
        assert!((norm(&d[256..]) - 1.0).abs() < 1e-6);
        // constant colour patches have no gradient in any opponent channel
        let red = rgb(16, |c, _, _| if c == 0 { 180 } else { 0 });
        let green = rgb(16, |c, _, _| if c == 1 { 180 } else { 0 });
        let dr = opponent_sift_at::<f64>(&red, (8, 8), 16).unwrap();
        let dg = opponent_sift_at::<f64>(&green, (8, 8), 16).unwrap();
        assert_eq!(&dr[256..], &dg[256..]);
        assert!(dr[..128].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rgb_histogram_cases() {
        let img = rgb(16, |c, _, _| [10, 100, 250][c]);
        let h = rgb_hist_at::<f64>(&img, (8, 8), 16, 4).unwrap();
        assert_eq!(h.len(), 64);
        assert_eq!(h.iter().filter(|&&v| v > 0.0).count(), 1);
        assert_eq!(h[0 * 16 + 1 * 4 + 3], 1.0);
        let img = rgb(16, |_, x, _| if x < 8 { 0 } else { 255 });
        let h = rgb_hist_at::<f64>(&img, (8, 8), 16, 4).unwrap();
        assert_eq!(h[0], 0.5);
        assert_eq!(h[63], 0.5);
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extraction_is_deterministic_and_scaled() {
        let img = rgb(40, |c, x, y| ((x * (c + 3) + y * y) % 256) as u8);
        for kind in [
            DescriptorKind::Sift,
            DescriptorKind::RgbSift,
            DescriptorKind::OpponentSift,
            DescriptorKind::RgbHist,
        ] {
            let spec = DescriptorSpec::new(kind);
            let a = extract::<f64>(&img, &spec).unwrap();
            let b = extract::<f64>(&img, &spec).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.len(), 25);
            assert_eq!(a.values.len(), 25 * spec.dim());
            assert!(a.values.iter().all(|&v| (0.0..=255.0).contains(&v)));
            for &(x, y) in &a.points {
                assert!(x >= 8 && y >= 8 && x + 8 <= 40 && y + 8 <= 40);
            }
        }
    }

    #[test]
    fn out_of_bounds_patch_rejected() {
        let img = gray(20, 20, |_, _| 0);
        assert!(sift_at::<f64>(&img, (4, 4), 16).is_err());
        assert!(sift_at::<f64>(&img, (13, 8), 16).is_err());
    }

    proptest! {
        #[test]
        fn sift_norm_and_intensity_invariance(
            pixels in prop::collection::vec(0u8..=100, 256),
            shift in 0u8..=50,
            factor in 1u8..=2,
        ) {
            let base = gray(16, 16, |x, y| pixels[y * 16 + x]);
            let d = sift_at::<f64>(&base, (8, 8), 16).unwrap();
            let n = norm(&d);
            prop_assert!(n == 0.0 || (n - 1.0).abs() < 1e-6);
            let moved = gray(16, 16, |x, y| pixels[y * 16 + x] * factor + shift);
            let e = sift_at::<f64>(&moved, (8, 8), 16).unwrap();
            for (a, b) in d.iter().zip(&e) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }
    }
}
