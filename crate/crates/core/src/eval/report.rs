use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::stats::{confidence_interval, normalized_accuracy, paired_difference, ConfusionMatrix, PairedTest};
use super::splits::SplitPlan;
use crate::error::{Error, Result};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub confusion: ConfusionMatrix,
    pub per_class_accuracy: Vec<f64>,
    pub normalized_accuracy: f64,
    /// Samples left out of this run because no descriptor could be extracted.
    pub excluded: usize,
}

impl RunResult {
    pub fn from_confusion(confusion: ConfusionMatrix, excluded: usize) -> Result<Self> {
        Ok(Self {
            per_class_accuracy: confusion.per_class_recall()?,
            normalized_accuracy: normalized_accuracy(&confusion)?,
            confusion,
            excluded,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: u32,
    pub method_id: String,
    pub classes: Vec<String>,
    pub master_seed: u64,
    pub per_class_train: usize,
    pub plan_fingerprint: String,
    pub runs: Vec<RunResult>,
    pub mean_accuracy: f64,
    /// 95% (or `1 - alpha`) half-width; absent for a single run.
    pub half_width: Option<f64>,
    pub alpha: f64,
}

impl EvalReport {
    pub fn assemble(
        method_id: impl Into<String>,
        classes: Vec<String>,
        plan: &SplitPlan,
        runs: Vec<RunResult>,
        alpha: f64,
    ) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::Empty("report has no runs".into()));
        }
        let accs: Vec<f64> = runs.iter().map(|r| r.normalized_accuracy).collect();
        let (mean_accuracy, half_width) = if accs.len() >= 2 {
            let (m, h) = confidence_interval(&accs, alpha)?;
            (m, Some(h))
        } else {
            (accs[0], None)
        };
        Ok(Self {
            version: REPORT_VERSION,
            method_id: method_id.into(),
            classes,
            master_seed: plan.master_seed,
            per_class_train: plan.per_class_train,
            plan_fingerprint: plan.fingerprint(),
            runs,
            mean_accuracy,
            half_width,
            alpha,
        })
    }

    pub fn single_run(&self) -> bool {
        self.runs.len() == 1
    }

    /// Accuracy of every class averaged over runs.
    pub fn mean_per_class_accuracy(&self) -> Vec<f64> {
        let n = self.runs.len() as f64;
        (0..self.classes.len())
            .map(|c| self.runs.iter().map(|r| r.per_class_accuracy[c]).sum::<f64>() / n)
            .collect()
    }

    /// Confusion counts summed over runs.
    pub fn pooled_confusion(&self) -> ConfusionMatrix {
        let mut m = ConfusionMatrix::new(self.classes.len());
        for r in &self.runs {
            for (row, src) in m.counts.iter_mut().zip(&r.confusion.counts) {
                for (a, b) in row.iter_mut().zip(src) {
                    *a += b;
                }
            }
        }
        m
    }

    /// `run,normalized_accuracy` rows followed by `mean` and `half_width`.
    pub fn accuracy_table(&self) -> String {
        let mut out = String::from("run,normalized_accuracy\n");
        for (i, r) in self.runs.iter().enumerate() {
            let _ = writeln!(out, "{},{:.6}", i, r.normalized_accuracy);
        }
        let _ = writeln!(out, "mean,{:.6}", self.mean_accuracy);
        match self.half_width {
            Some(h) => {
                let _ = writeln!(out, "half_width,{h:.6}");
            }
            None => out.push_str("half_width,single_run\n"),
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method: {}", self.method_id);
        let _ = writeln!(
            out,
            "protocol: {} run(s), {} training samples per class, master seed {}",
            self.runs.len(),
            self.per_class_train,
            self.master_seed
        );
        match self.half_width {
            Some(h) => {
                let _ = writeln!(
                    out,
                    "normalized accuracy: {:.2}% ± {:.2} ({:.0}% CI)",
                    100.0 * self.mean_accuracy,
                    100.0 * h,
                    100.0 * (1.0 - self.alpha)
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    "normalized accuracy: {:.2}% (single run, no interval)",
                    100.0 * self.mean_accuracy
                );
            }
        }
        let excluded: usize = self.runs.iter().map(|r| r.excluded).sum();
        if excluded > 0 {
            let _ = writeln!(out, "excluded samples (all runs): {excluded}");
        }
        let _ = writeln!(out, "per-class accuracy:");
        for (i, (class, acc)) in self.classes.iter().zip(self.mean_per_class_accuracy()).enumerate() {
            let _ = writeln!(out, "  {:>2} {:<16} {:6.2}%", i + 1, class, 100.0 * acc);
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::format("report", e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let r: Self = serde_json::from_str(&text).map_err(|e| Error::format("report", e.to_string()))?;
        if r.version != REPORT_VERSION {
            return Err(Error::format("report", format!("unsupported version {}", r.version)));
        }
        Ok(r)
    }
}

/// Paired per-class comparison of two reports evaluated on the same splits.
pub fn paired_class_test(a: &EvalReport, b: &EvalReport, alpha: f64) -> Result<PairedTest> {
    if a.plan_fingerprint != b.plan_fingerprint || a.master_seed != b.master_seed {
        return Err(Error::Protocol(format!(
            "reports use different split plans ({} seed {} vs {} seed {})",
            &a.plan_fingerprint[..12.min(a.plan_fingerprint.len())],
            a.master_seed,
            &b.plan_fingerprint[..12.min(b.plan_fingerprint.len())],
            b.master_seed
        )));
    }
    if a.classes != b.classes {
        return Err(Error::Protocol("reports use different class lists".into()));
    }
    paired_difference(&a.mean_per_class_accuracy(), &b.mean_per_class_accuracy(), alpha)
}
