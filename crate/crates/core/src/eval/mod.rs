//! Evaluation protocol: balanced splits, repeated runs, balanced accuracy
//! with Student-t intervals, and the paired per-class comparison.

mod experiment;
pub mod figures;
mod report;
mod splits;
mod stats;

pub use experiment::{
    baseline_matrix, bovw_run_features, evaluate_features, run_experiment, sample_descriptors,
    BovwMethod, ExperimentOptions, FeaturePath, MethodSpec,
};
pub use report::{paired_class_test, EvalReport, RunResult, REPORT_VERSION};
pub use splits::{make_splits, Split, SplitPlan};
pub use stats::{
    confidence_interval, normalized_accuracy, paired_difference, t_critical, t_two_sided_cdf,
    ConfusionMatrix, PairedTest, Verdict,
};
