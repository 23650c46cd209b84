use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::scalar::Real;

/// Sample indices of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub runs: Vec<Split>,
    pub per_class_train: usize,
    pub master_seed: u64,
}

impl SplitPlan {
    /// Hex SHA-256 over the seed, the per-class count and every index list.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.master_seed.to_le_bytes());
        h.update((self.per_class_train as u64).to_le_bytes());
        for run in &self.runs {
            for part in [&run.train, &run.test] {
                h.update((part.len() as u64).to_le_bytes());
                for &i in part.iter() {
                    h.update((i as u64).to_le_bytes());
                }
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Balanced random splits: `per_class` training samples drawn per class
/// without replacement, the rest for testing.
///
/// Run `r` draws from a ChaCha stream `r` seeded with `master_seed`, so the
/// plan is a pure function of the dataset order and the seed.
pub fn make_splits<T: Real>(
    ds: &Dataset<T>,
    per_class: usize,
    runs: usize,
    master_seed: u64,
) -> Result<SplitPlan> {
    if per_class == 0 || runs == 0 {
        return Err(Error::InvalidParameter(format!(
            "need per_class >= 1 and runs >= 1, got {per_class} and {runs}"
        )));
    }
    let labels = ds.label_indices();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); ds.classes().len()];
    for (i, &c) in labels.iter().enumerate() {
        members[c].push(i);
    }
    for (class, m) in ds.classes().iter().zip(&members) {
        if m.len() <= per_class {
            return Err(Error::Protocol(format!(
                "class {class:?} has {} samples; needs more than {per_class} to leave a test set",
                m.len()
            )));
        }
    }
    let runs = (0..runs)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
            rng.set_stream(r as u64);
            let mut train = Vec::with_capacity(per_class * members.len());
            for m in &members {
                let mut shuffled = m.clone();
                shuffled.shuffle(&mut rng);
                train.extend_from_slice(&shuffled[..per_class]);
            }
            train.sort_unstable();
            let mut is_train = vec![false; labels.len()];
            train.iter().for_each(|&i| is_train[i] = true);
            let test = (0..labels.len()).filter(|&i| !is_train[i]).collect();
            Split { train, test }
        })
        .collect();
    Ok(SplitPlan {
        runs,
        per_class_train: per_class,
        master_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::SensorSample;
    use proptest::prelude::*;

    pub(crate) fn toy(counts: &[usize]) -> Dataset<f64> {
        let mut samples = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for i in 0..n {
                samples.push(
                    SensorSample::new(format!("c{c}_{i}"), format!("class{c:02}"), [vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]], 32.0)
                        .unwrap(),
                );
            }
        }
        Dataset::new(samples)
    }

    #[test]
    fn wharf_sized_plan() {
        // class sizes of the 12 retained WHARF classes
        let ds = toy(&[12, 112, 31, 51, 115, 101, 28, 100, 109, 112, 13, 100]);
        assert_eq!(ds.len(), 884);
        let plan = make_splits(&ds, 10, 10, 42).unwrap();
        assert_eq!(plan.runs.len(), 10);
        for run in &plan.runs {
            assert_eq!((run.train.len(), run.test.len()), (120, 764));
        }
        assert_eq!(plan, make_splits(&ds, 10, 10, 42).unwrap());
        assert_ne!(plan.fingerprint(), make_splits(&ds, 10, 10, 43).unwrap().fingerprint());
        assert_ne!(plan.runs[0], plan.runs[1]);
    }

    #[test]
    fn class_at_minimum_size_rejected() {
        let ds = toy(&[10, 30]);
        match make_splits(&ds, 10, 1, 0) {
            Err(Error::Protocol(msg)) => assert!(msg.contains("class00")),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn splits_partition_and_balance(
            counts in prop::collection::vec(4usize..30, 2..8),
            per_class in 1usize..4,
            seed in any::<u64>(),
        ) {
            let ds = toy(&counts);
            let plan = make_splits(&ds, per_class, 3, seed).unwrap();
            let labels = ds.label_indices();
            for run in &plan.runs {
                let mut all: Vec<usize> = run.train.iter().chain(&run.test).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
                for c in 0..counts.len() {
                    prop_assert_eq!(run.train.iter().filter(|&&i| labels[i] == c).count(), per_class);
                }
            }
        }
    }
}
