//! Balanced accuracy, Student-t intervals and the paired per-class test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Square confusion matrix; rows are true classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: usize,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_pairs(classes: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut m = Self::new(classes);
        for (truth, predicted) in pairs {
            m.record(truth, predicted);
        }
        m
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn row_total(&self, class: usize) -> usize {
        self.counts[class].iter().sum()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Recall per class: diagonal over row sum.
    pub fn per_class_recall(&self) -> Result<Vec<f64>> {
        (0..self.classes)
            .map(|c| {
                let total = self.row_total(c);
                if total == 0 {
                    return Err(Error::Protocol(format!("class {c} has no test samples")));
                }
                Ok(self.counts[c][c] as f64 / total as f64)
            })
            .collect()
    }
}

/// Mean per-class recall (balanced accuracy).
pub fn normalized_accuracy(m: &ConfusionMatrix) -> Result<f64> {
    let recalls = m.per_class_recall()?;
    if recalls.is_empty() {
        return Err(Error::Empty("confusion matrix has no classes".into()));
    }
    Ok(recalls.iter().sum::<f64>() / recalls.len() as f64)
}

/// `P(|T| <= t)` for Student's t with integer `df`, from the closed-form
/// finite series in `θ = atan(t / √df)`.
pub fn t_two_sided_cdf(t: f64, df: u32) -> f64 {
    assert!(df >= 1);
    let t = t.abs();
    let theta = (t / f64::from(df).sqrt()).atan();
    let (s, c) = theta.sin_cos();
    let c2 = c * c;
    if df % 2 == 1 {
        // (2/π)[θ + sinθ cosθ (1 + 2/3 cos²θ + 2·4/(3·5) cos⁴θ + ...)]
        let mut sum = 0.0;
        if df > 1 {
            let mut term = 1.0;
            sum = 1.0;
            let mut k = 1;
            while 2 * k + 1 < df {
                term *= (2 * k) as f64 / (2 * k + 1) as f64 * c2;
                sum += term;
                k += 1;
            }
        }
        (2.0 / std::f64::consts::PI) * (theta + s * c * sum)
    } else {
        // sinθ (1 + 1/2 cos²θ + 1·3/(2·4) cos⁴θ + ...)
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1;
        while 2 * k < df {
            term *= (2 * k - 1) as f64 / (2 * k) as f64 * c2;
            sum += term;
            k += 1;
        }
        s * sum
    }
}

/// Two-sided critical value `t_{1-α/2, df}`.
pub fn t_critical(alpha: f64, df: u32) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must be in (0, 1), got {alpha}")));
    }
    if df == 0 {
        return Err(Error::InvalidParameter("t distribution needs df >= 1".into()));
    }
    let target = 1.0 - alpha;
    let mut hi = 1.0;
    while t_two_sided_cdf(hi, df) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if t_two_sided_cdf(mid, df) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Mean and Student-t half-width `t_{1-α/2, n-1} s / √n`.
pub fn confidence_interval<T: Real>(values: &[T], alpha: f64) -> Result<(T, T)> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Protocol(format!(
            "confidence interval needs at least 2 values, got {n}"
        )));
    }
    let nf = T::from_usize_lossy(n);
    let mean = values.iter().copied().sum::<T>() / nf;
    let ss: T = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
    let s = (ss / T::from_usize_lossy(n - 1)).sqrt();
    let t = T::lit(t_critical(alpha, (n - 1) as u32)?);
    Ok((mean, t * s / nf.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ABetter,
    BBetter,
    NoDifference,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::ABetter => "A_better",
            Verdict::BBetter => "B_better",
            Verdict::NoDifference => "no_difference",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTest {
    pub mean_diff: f64,
    pub half_width: f64,
    pub verdict: Verdict,
    /// Per-class differences `A_c - B_c`.
    pub differences: Vec<f64>,
}

/// Paired test on per-class mean accuracies.
///
/// `a[c]` and `b[c]` are the accuracies of class `c` averaged over runs. The
/// interval is taken over the class differences; it decides for A when it
/// lies entirely above zero and for B when entirely below.
pub fn paired_difference(a: &[f64], b: &[f64], alpha: f64) -> Result<PairedTest> {
    if a.len() != b.len() {
        return Err(Error::Protocol(format!(
            "per-class accuracy lists differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let differences: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (mean_diff, half_width) = confidence_interval(&differences, alpha)?;
    let verdict = if mean_diff - half_width > 0.0 {
        Verdict::ABetter
    } else if mean_diff + half_width < 0.0 {
        Verdict::BBetter
    } else {
        Verdict::NoDifference
    };
    Ok(PairedTest {
        mean_diff,
        half_width,
        verdict,
        differences,
    })
}
