//! Small raster figures: confusion heatmaps, paired-difference bars and
//! contact sheets of plots. No text is drawn; class order follows the report.

use std::path::Path;

use super::stats::{ConfusionMatrix, PairedTest};
use crate::error::{Error, Result};
use crate::image::{encode_png, PngColor, RpImage};

const CELL: usize = 24;
const BAR: usize = 32;
const BAR_HEIGHT: usize = 240;

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn put(buf: &mut [u8], width: usize, x: usize, y: usize, rgb: [u8; 3]) {
    let o = (y * width + x) * 3;
    buf[o..o + 3].copy_from_slice(&rgb);
}

/// Row-normalized confusion heatmap, white (0) to dark blue (1), with a
/// one-pixel grid.
pub fn confusion_heatmap_png(m: &ConfusionMatrix) -> Result<Vec<u8>> {
    let n = m.classes;
    if n == 0 {
        return Err(Error::Empty("confusion matrix has no classes".into()));
    }
    let side = n * CELL + 1;
    let mut buf = vec![255u8; side * side * 3];
    for (t, row) in m.counts.iter().enumerate() {
        let total = m.row_total(t);
        for (p, &c) in row.iter().enumerate() {
            let v = if total == 0 { 0.0 } else { c as f64 / total as f64 };
            let rgb = [
                (255.0 * (1.0 - v)).round() as u8,
                (255.0 * (1.0 - 0.8 * v)).round() as u8,
                (255.0 * (1.0 - 0.45 * v)).round() as u8,
            ];
            for y in t * CELL + 1..(t + 1) * CELL {
                for x in p * CELL + 1..(p + 1) * CELL {
                    put(&mut buf, side, x, y, rgb);
                }
            }
        }
    }
    for k in 0..=n {
        for i in 0..side {
            put(&mut buf, side, k * CELL, i, [160; 3]);
            put(&mut buf, side, i, k * CELL, [160; 3]);
        }
    }
    encode_png(side, side, PngColor::Rgb, &buf)
}

pub fn write_confusion_heatmap(m: &ConfusionMatrix, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &confusion_heatmap_png(m)?)
}

/// One bar per class difference plus a final bar for the mean with its
/// interval drawn as a black whisker. Positive bars are green, negative red.
pub fn paired_test_png(test: &PairedTest) -> Result<Vec<u8>> {
    let n = test.differences.len();
    if n == 0 {
        return Err(Error::Empty("paired test has no differences".into()));
    }
    let lo = test.mean_diff - test.half_width;
    let hi = test.mean_diff + test.half_width;
    let extent = test
        .differences
        .iter()
        .chain([lo, hi].iter())
        .fold(1e-9f64, |a, &v| a.max(v.abs()));
    let width = (n + 2) * BAR;
    let height = BAR_HEIGHT;
    let mid = height / 2;
    let to_y = |v: f64| -> usize {
        let y = mid as f64 - v / extent * (mid as f64 - 4.0);
        (y.round().max(0.0) as usize).min(height - 1)
    };
    let mut buf = vec![255u8; width * height * 3];
    let bar = |buf: &mut Vec<u8>, slot: usize, v: f64, rgb: [u8; 3]| {
        let (a, b) = {
            let y = to_y(v);
            if y < mid { (y, mid) } else { (mid, y) }
        };
        for y in a..=b {
            for x in slot * BAR + 4..(slot + 1) * BAR - 4 {
                put(buf, width, x, y, rgb);
            }
        }
    };
    for (i, &d) in test.differences.iter().enumerate() {
        let rgb = if d >= 0.0 { [60, 160, 80] } else { [200, 70, 60] };
        bar(&mut buf, i, d, rgb);
    }
    let slot = n + 1;
    bar(&mut buf, slot, test.mean_diff, [90, 90, 200]);
    let cx = slot * BAR + BAR / 2;
    for y in to_y(hi)..=to_y(lo) {
        put(&mut buf, width, cx, y, [0; 3]);
    }
    for x in cx - 6..=cx + 6 {
        put(&mut buf, width, x, to_y(hi), [0; 3]);
        put(&mut buf, width, x, to_y(lo), [0; 3]);
    }
    for x in 0..width {
        put(&mut buf, width, x, mid, [0; 3]);
    }
    encode_png(width, height, PngColor::Rgb, &buf)
}

pub fn write_paired_test(test: &PairedTest, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &paired_test_png(test)?)
}

/// Tiles plots left to right in rows of `columns`, top-left aligned, on a
/// white background. Gray plots are expanded to RGB.
pub fn contact_sheet_png(images: &[RpImage], columns: usize) -> Result<Vec<u8>> {
    if images.is_empty() || columns == 0 {
        return Err(Error::Empty("contact sheet needs images and columns".into()));
    }
    let gap = 4;
    let cw = images.iter().map(RpImage::width).max().unwrap_or(0) + gap;
    let ch = images.iter().map(RpImage::height).max().unwrap_or(0) + gap;
    let cols = columns.min(images.len());
    let rows = images.len().div_ceil(cols);
    let (width, height) = (cols * cw + gap, rows * ch + gap);
    let mut buf = vec![255u8; width * height * 3];
    for (i, img) in images.iter().enumerate() {
        let (ox, oy) = (gap + (i % cols) * cw, gap + (i / cols) * ch);
        for y in 0..img.height() {
            for x in 0..img.width() {
                let rgb = if img.channels() == 3 {
                    [img.get(0, x, y), img.get(1, x, y), img.get(2, x, y)]
                } else {
                    [img.get(0, x, y); 3]
                };
                put(&mut buf, width, ox + x, oy + y, rgb);
            }
        }
    }
    encode_png(width, height, PngColor::Rgb, &buf)
}
