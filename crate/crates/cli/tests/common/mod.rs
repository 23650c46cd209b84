#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rphar::ingest::{write_canonical, Dataset, SensorSample};

/// Deterministic jitter in [-0.5, 0.5) without a random number generator.
pub fn jitter(a: usize, b: usize, c: usize) -> f64 {
    let mut h = (a as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (b as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ (c as u64).wrapping_mul(0x1656_67B1_9E37_79F9);
    h ^= h >> 31;
    h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h ^= h >> 29;
    (h >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

/// Classes as (label, period in samples, amplitude); period 0 is a static pose.
pub const CLASSES: [(&str, f64, f64); 4] = [
    ("walk", 12.0, 1.0),
    ("brush_teeth", 4.0, 0.6),
    ("sit_down", 0.0, 0.0),
    ("climb_stairs", 24.0, 1.4),
];

pub fn synthetic_dataset(per_class: usize, len: usize) -> Dataset<f64> {
    let mut samples = Vec::new();
    for (c, &(label, period, amp)) in CLASSES.iter().enumerate() {
        for i in 0..per_class {
            let n = len + i % 5;
            let mut axes: [Vec<f64>; 3] = Default::default();
            for (a, axis) in axes.iter_mut().enumerate() {
                *axis = (0..n)
                    .map(|t| {
                        let wave = if period > 0.0 {
                            amp * (std::f64::consts::TAU * t as f64 / period + a as f64 + i as f64 * 0.3).sin()
                        } else {
                            0.3 * a as f64
                        };
                        wave + 0.1 * jitter(c * 1000 + i, a, t)
                    })
                    .collect();
            }
            samples.push(SensorSample::new(format!("{label}-{i:02}"), label, axes, 32.0).unwrap());
        }
    }
    Dataset::new(samples)
}

/// Canonical directory of [`synthetic_dataset`].
pub fn synthetic_canonical(dir: &Path, per_class: usize, len: usize) -> PathBuf {
    let out = dir.join("canonical");
    write_canonical(&synthetic_dataset(per_class, len), &out).unwrap();
    out
}

/// Raw WHARF layout: one directory per class with coded `x y z` lines,
/// plus a model directory that must be ignored.
pub fn write_wharf(root: &Path, classes: &[(&str, usize)], len: usize) {
    for (c, &(dir, count)) in classes.iter().enumerate() {
        let d = root.join(dir);
        std::fs::create_dir_all(&d).unwrap();
        let label = dir.to_ascii_lowercase();
        for i in 0..count {
            let mut text = String::new();
            for t in 0..len {
                let phase = std::f64::consts::TAU * t as f64 / (4.0 + c as f64);
                let code = |a: usize| (31.5 + 20.0 * (phase + a as f64).sin() + 4.0 * jitter(i, a, t)).round() as i64;
                writeln!(text, "{} {} {}", code(0), code(1), code(2)).unwrap();
            }
            let name = format!("Accelerometer-2011-03-{:02}-10-{:02}-00-{label}-f{}.txt", 10 + c, i, i % 3);
            std::fs::write(d.join(name), text).unwrap();
        }
    }
    let model = root.join("Walk_MODEL");
    std::fs::create_dir_all(&model).unwrap();
    std::fs::write(model.join("model.txt"), "not a recording\n").unwrap();
}

/// Runs the CLI in-process, returning the exit code.
pub fn rphar<S: AsRef<str>>(args: &[S]) -> i32 {
    let mut v = vec!["rphar".to_string()];
    v.extend(args.iter().map(|s| s.as_ref().to_string()));
    rphar_cli::main_with_args(v)
}
