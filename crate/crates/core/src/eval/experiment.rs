use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{EvalReport, RunResult};
use super::splits::{Split, SplitPlan};
use super::stats::ConfusionMatrix;
use crate::baseline::{baseline_feature, BaselineKind};
use crate::bovw::{build_codebook, encode, BovwConfig, Codebook};
use crate::classify::{train, Standardizer, TrainConfig};
use crate::descriptors::cache::DescriptorCache;
use crate::descriptors::{extract, DescriptorKind, DescriptorSpec, LocalDescriptorSet};
use crate::error::{Error, Result};
use crate::image::RpVariant;
use crate::ingest::{Dataset, SensorSample};
use crate::rp::{render_variant, RpConfig};
use crate::scalar::Real;

/// Plot, descriptor and codebook settings of a BoVW feature path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BovwMethod {
    pub variant: RpVariant,
    pub rp: RpConfig,
    pub descriptor: DescriptorSpec,
    pub codebook_size: usize,
    pub codebook_seed: u64,
    pub bovw: BovwConfig,
}

impl Default for BovwMethod {
    fn default() -> Self {
        Self {
            variant: RpVariant::Rgb,
            rp: RpConfig::default(),
            descriptor: DescriptorSpec::new(DescriptorKind::RgbSift),
            codebook_size: 1000,
            codebook_seed: 0,
            bovw: BovwConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturePath {
    Baseline(BaselineKind),
    Bovw(BovwMethod),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub features: FeaturePath,
    pub classifier: TrainConfig,
    pub alpha: f64,
}

impl MethodSpec {
    pub fn baseline(kind: BaselineKind) -> Self {
        Self {
            features: FeaturePath::Baseline(kind),
            classifier: TrainConfig::default(),
            alpha: 0.05,
        }
    }

    pub fn bovw(method: BovwMethod) -> Self {
        Self {
            features: FeaturePath::Bovw(method),
            classifier: TrainConfig::default(),
            alpha: 0.05,
        }
    }

    /// Short identifier such as `quantile` or `rp-rgb/bovw1000-rgb_sift/soft150/maxspm1-2-4`.
    pub fn id(&self) -> String {
        match &self.features {
            FeaturePath::Baseline(kind) => kind.name().to_string(),
            FeaturePath::Bovw(m) => {
                let mut id = format!(
                    "rp-{}/bovw{}-{}/{}",
                    m.variant.name().replace('_', "-"),
                    m.codebook_size,
                    m.descriptor.kind.name(),
                    m.bovw.name()
                );
                if let Some(eps) = m.rp.epsilon {
                    id.push_str(&format!("/eps{eps}"));
                }
                id
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOptions {
    pub cache: Option<DescriptorCache>,
}

fn is_too_small(e: &Error) -> bool {
    matches!(e, Error::Length { .. } | Error::EmptyGrid { .. })
}

/// Dense descriptors of one sample's plot, or `None` when the plot cannot
/// hold a single patch.
pub fn sample_descriptors<T: Real>(
    sample: &SensorSample<T>,
    method: &BovwMethod,
    cache: Option<&DescriptorCache>,
) -> Result<Option<LocalDescriptorSet<T>>> {
    let key = cache.map(|_| DescriptorCache::key(sample.id(), method.variant, &method.rp, &method.descriptor));
    if let (Some(c), Some(k)) = (cache, &key) {
        if let Some(set) = c.load(k) {
            return Ok(Some(set));
        }
    }
    let extracted = render_variant(sample, method.variant, &method.rp)
        .and_then(|img| extract::<T>(&img, &method.descriptor));
    match extracted {
        Ok(set) => {
            if let (Some(c), Some(k)) = (cache, &key) {
                c.store(k, &set)?;
            }
            Ok(Some(set))
        }
        Err(e) if is_too_small(&e) => {
            warn!("sample {} excluded: {e}", sample.id());
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Trains on the split's training vectors and tallies test predictions.
/// `None` features are excluded and counted.
fn evaluate_split<T: Real>(
    features: &[Option<Vec<T>>],
    labels: &[usize],
    classes: &[String],
    split: &Split,
    classifier: &TrainConfig,
    standardize: bool,
) -> Result<RunResult> {
    let mut excluded = 0;
    let mut xs = Vec::with_capacity(split.train.len());
    let mut ys = Vec::with_capacity(split.train.len());
    for &i in &split.train {
        match &features[i] {
            Some(f) => {
                xs.push(f.clone());
                ys.push(classes[labels[i]].clone());
            }
            None => excluded += 1,
        }
    }
    let standardizer = if standardize {
        Some(Standardizer::fit(&xs)?)
    } else {
        None
    };
    let model = train(&xs, &ys, classifier, standardizer)?;
    let to_dataset_class: Vec<usize> = model
        .classes
        .iter()
        .map(|c| classes.iter().position(|d| d == c).expect("model class from dataset"))
        .collect();
    let mut confusion = ConfusionMatrix::new(classes.len());
    for &i in &split.test {
        match &features[i] {
            Some(f) => {
                let p = model.predict(f)?;
                confusion.record(labels[i], to_dataset_class[p.class]);
            }
            None => excluded += 1,
        }
    }
    RunResult::from_confusion(confusion, excluded)
}

/// Runs the protocol on precomputed per-sample vectors.
///
/// Used for the baselines and for any externally computed features.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_features<T: Real>(
    method_id: &str,
    features: &[Option<Vec<T>>],
    labels: &[usize],
    classes: &[String],
    plan: &SplitPlan,
    classifier: &TrainConfig,
    standardize: bool,
    alpha: f64,
) -> Result<EvalReport> {
    let runs = plan
        .runs
        .iter()
        .enumerate()
        .map(|(r, split)| {
            let cfg = TrainConfig {
                seed: classifier.seed.wrapping_add(r as u64),
                ..*classifier
            };
            evaluate_split(features, labels, classes, split, &cfg, standardize)
        })
        .collect::<Result<Vec<_>>>()?;
    EvalReport::assemble(method_id, classes.to_vec(), plan, runs, alpha)
}

/// Per-sample features of one baseline; too-short samples map to `None`.
pub fn baseline_matrix<T: Real>(ds: &Dataset<T>, kind: BaselineKind) -> Result<Vec<Option<Vec<T>>>> {
    ds.samples()
        .par_iter()
        .map(|s| match baseline_feature(s, kind) {
            Ok(f) => Ok(Some(f.values)),
            Err(e) if is_too_small(&e) => {
                warn!("sample {} excluded: {e}", s.id());
                Ok(None)
            }
            Err(e) => Err(e),
        })
        .collect()
}

/// Codebook from the training split's descriptors and the BoVW vector of
/// every sample for one run.
pub fn bovw_run_features<T: Real>(
    ds: &Dataset<T>,
    method: &BovwMethod,
    split: &Split,
    run: usize,
    opts: &ExperimentOptions,
) -> Result<(Codebook<T>, Vec<Option<Vec<T>>>)> {
    method.bovw.validate()?;
    let cache = opts.cache.as_ref();
    let train_sets: Vec<Option<LocalDescriptorSet<T>>> = split
        .train
        .par_iter()
        .map(|&i| sample_descriptors(&ds.samples()[i], method, cache))
        .collect::<Result<_>>()?;
    let pool: Vec<&[T]> = train_sets
        .iter()
        .flatten()
        .flat_map(|s| s.descriptors())
        .collect();
    let codebook = build_codebook(
        &pool,
        method.descriptor.kind,
        method.codebook_size,
        method.codebook_seed.wrapping_add(run as u64),
    )?;
    let mut slot = vec![None; ds.len()];
    for (pos, &i) in split.train.iter().enumerate() {
        slot[i] = Some(pos);
    }
    let features = (0..ds.len())
        .into_par_iter()
        .map(|i| {
            let owned;
            let set = match slot[i] {
                Some(pos) => train_sets[pos].as_ref(),
                None => {
                    owned = sample_descriptors(&ds.samples()[i], method, cache)?;
                    owned.as_ref()
                }
            };
            set.map(|s| encode(s, &codebook, &method.bovw).map(|f| f.values))
                .transpose()
        })
        .collect::<Result<_>>()?;
    Ok((codebook, features))
}

/// Runs `method` on every split of `plan`.
pub fn run_experiment<T: Real>(
    ds: &Dataset<T>,
    method: &MethodSpec,
    plan: &SplitPlan,
    opts: &ExperimentOptions,
) -> Result<EvalReport> {
    let labels = ds.label_indices();
    let classes = ds.classes();
    match &method.features {
        FeaturePath::Baseline(kind) => {
            let features = baseline_matrix(ds, *kind)?;
            evaluate_features(&method.id(), &features, &labels, classes, plan, &method.classifier, true, method.alpha)
        }
        FeaturePath::Bovw(bovw) => {
            let runs = plan
                .runs
                .iter()
                .enumerate()
                .map(|(r, split)| {
                    let (_, features) = bovw_run_features(ds, bovw, split, r, opts)?;
                    let cfg = TrainConfig {
                        seed: method.classifier.seed.wrapping_add(r as u64),
                        ..method.classifier
                    };
                    evaluate_split(&features, &labels, classes, split, &cfg, false)
                })
                .collect::<Result<Vec<_>>>()?;
            EvalReport::assemble(method.id(), classes.to_vec(), plan, runs, method.alpha)
        }
    }
}
