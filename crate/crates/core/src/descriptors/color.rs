use super::sift::Plane;
use crate::image::RpImage;
use crate::scalar::Real;

/// Opponent colour channels
/// `O1 = (R - G)/√2`, `O2 = (R + G - 2B)/√6`, `O3 = (R + G + B)/√3`.
/// Gray images are treated as R = G = B.
pub fn opponent_planes<T: Real>(image: &RpImage) -> [Plane<T>; 3] {
    let (w, h) = (image.width(), image.height());
    let ch = |c: usize| image.plane(c.min(image.channels() - 1));
    let (r, g, b) = (ch(0), ch(1), ch(2));
    let lit = |p: u8| T::from_usize_lossy(p as usize);
    let two = T::lit(2.0);
    let (s2, s6, s3) = (two.sqrt(), T::lit(6.0).sqrt(), T::lit(3.0).sqrt());
    let make = |f: &dyn Fn(T, T, T) -> T| Plane {
        width: w,
        height: h,
        data: (0..w * h).map(|i| f(lit(r[i]), lit(g[i]), lit(b[i]))).collect(),
    };
    [
        make(&|r, g, _| (r - g) / s2),
        make(&|r, g, b| (r + g - two * b) / s6),
        make(&|r, g, b| (r + g + b) / s3),
    ]
}

/// Joint `bins³` histogram of the window at `(x0, y0)`, L1-normalized.
/// Bin index is `(r_bin * bins + g_bin) * bins + b_bin`.
pub fn rgb_hist_window<T: Real>(
    image: &RpImage,
    x0: usize,
    y0: usize,
    patch: usize,
    bins: usize,
) -> Vec<T> {
    let mut counts = vec![0usize; bins.pow(3)];
    let last = image.channels() - 1;
    let bin = |p: u8| (p as usize * bins) / 256;
    for y in y0..y0 + patch {
        for x in x0..x0 + patch {
            let r = bin(image.get(0, x, y));
            let g = bin(image.get(1.min(last), x, y));
            let b = bin(image.get(2.min(last), x, y));
            counts[(r * bins + g) * bins + b] += 1;
        }
    }
    let total = T::from_usize_lossy(patch * patch);
    counts
        .into_iter()
        .map(|c| T::from_usize_lossy(c) / total)
        .collect()
}
