//! Upright single-scale SIFT descriptor over a square patch.
//!
//! The patch is split into 4×4 cells with 8 orientation bins each. Every
//! pixel votes its gradient magnitude, Gaussian-weighted around the patch
//! centre, trilinearly into the two nearest cells along each axis and the
//! two nearest orientation bins. The 128-vector is L2-normalized, clamped at
//! 0.2 and normalized again.

use crate::scalar::Real;

pub const CELLS: usize = 4;
pub const ORIENTATIONS: usize = 8;
pub const SIFT_DIM: usize = CELLS * CELLS * ORIENTATIONS;
const CLAMP: f64 = 0.2;

/// A single real-valued image channel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Real> Plane<T> {
    pub fn from_u8(width: usize, height: usize, pixels: &[u8]) -> Self {
        Self {
            width,
            height,
            data: pixels.iter().map(|&p| T::from_usize_lossy(p as usize)).collect(),
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }
}

/// SIFT descriptor of the `patch`×`patch` window whose top-left pixel is `(x0, y0)`.
///
/// Gradients use central differences clamped to the window, so the result
/// depends on the window contents only. A window with no gradient yields the
/// zero vector.
pub fn sift_window<T: Real>(plane: &Plane<T>, x0: usize, y0: usize, patch: usize) -> Vec<T> {
    debug_assert!(x0 + patch <= plane.width && y0 + patch <= plane.height);
    let mut hist = vec![T::zero(); SIFT_DIM];
    let half = T::lit(0.5);
    let cell_w = T::from_usize_lossy(patch) / T::from_usize_lossy(CELLS);
    let centre = (T::from_usize_lossy(patch) - T::one()) * half;
    let sigma = T::from_usize_lossy(patch) * half;
    let inv_two_sigma_sq = T::one() / (T::lit(2.0) * sigma * sigma);
    let bins_per_rad = T::from_usize_lossy(ORIENTATIONS) / T::TAU();
    let last = patch - 1;
    let mut any_gradient = false;

    for v in 0..patch {
        for u in 0..patch {
            let px = |uu: usize, vv: usize| plane.at(x0 + uu, y0 + vv);
            let (ul, ur) = (u.saturating_sub(1), (u + 1).min(last));
            let (vu, vd) = (v.saturating_sub(1), (v + 1).min(last));
            let gx = (px(ur, v) - px(ul, v)) / T::from_usize_lossy(ur - ul);
            let gy = (px(u, vd) - px(u, vu)) / T::from_usize_lossy(vd - vu);
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == T::zero() {
                continue;
            }
            any_gradient = true;
            let (du, dv) = (T::from_usize_lossy(u) - centre, T::from_usize_lossy(v) - centre);
            let weight = (-(du * du + dv * dv) * inv_two_sigma_sq).exp() * mag;

            let mut angle = gy.atan2(gx);
            if angle < T::zero() {
                angle += T::TAU();
            }
            let o = angle * bins_per_rad;
            let o0 = o.floor();
            let fo = o - o0;
            let o0 = o0.to_usize().unwrap_or(0) % ORIENTATIONS;
            let o1 = (o0 + 1) % ORIENTATIONS;

            // cell-space coordinates of the pixel centre
            let cx = (T::from_usize_lossy(u) + half) / cell_w - half;
            let cy = (T::from_usize_lossy(v) + half) / cell_w - half;
            let (cx0, cy0) = (cx.floor(), cy.floor());
            let (fx, fy) = (cx - cx0, cy - cy0);
            let (cx0, cy0) = (cx0.to_i64().unwrap_or(-1), cy0.to_i64().unwrap_or(-1));

            for (dy, wy) in [(0i64, T::one() - fy), (1, fy)] {
                let iy = cy0 + dy;
                if !(0..CELLS as i64).contains(&iy) || wy == T::zero() {
                    continue;
                }
                for (dx, wx) in [(0i64, T::one() - fx), (1, fx)] {
                    let ix = cx0 + dx;
                    if !(0..CELLS as i64).contains(&ix) || wx == T::zero() {
                        continue;
                    }
                    let base = (iy as usize * CELLS + ix as usize) * ORIENTATIONS;
                    let w = weight * wy * wx;
                    hist[base + o0] += w * (T::one() - fo);
                    hist[base + o1] += w * fo;
                }
            }
        }
    }
    if any_gradient {
        normalize_clamped(&mut hist);
    }
    hist
}

fn l2_normalize<T: Real>(v: &mut [T]) -> bool {
    let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
    if !(norm > T::zero()) {
        v.iter_mut().for_each(|x| *x = T::zero());
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

fn normalize_clamped<T: Real>(v: &mut [T]) {
    if l2_normalize(v) {
        let cap = T::lit(CLAMP);
        v.iter_mut().for_each(|x| *x = x.min(cap));
        l2_normalize(v);
    }
}
