use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rphar::baseline::{BaselineKind, Transform};
use rphar::bovw::{BovwConfig, Pooling};
use rphar::descriptors::cache::DescriptorCache;
use rphar::descriptors::{DescriptorKind, DescriptorSpec};
use rphar::eval::{
    evaluate_features, make_splits, paired_class_test, run_experiment, BovwMethod,
    ExperimentOptions, MethodSpec, Verdict,
};
use rphar::ingest::{Dataset, SensorSample};
use rphar::{Dataset64, RpVariant};

/// Three activity-like classes: slow sway, fast shake, and a static pose
/// with noise. Lengths vary a little per sample.
fn sensor_dataset(per_class: usize, seed: u64) -> Dataset64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut samples = Vec::new();
    for (label, freq) in [("sway", 0.05), ("shake", 0.3), ("still", 0.0)] {
        for i in 0..per_class {
            let n = 48 + 4 * (i % 3);
            let phase = i as f64 * 0.37;
            let mut axes: [Vec<f64>; 3] = Default::default();
            for (a, axis) in axes.iter_mut().enumerate() {
                *axis = (0..n)
                    .map(|t| {
                        let s = (2.0 * std::f64::consts::PI * freq * t as f64 + phase + a as f64).sin();
                        s + noise.sample(&mut rng)
                    })
                    .collect();
            }
            samples.push(SensorSample::new(format!("{label}-{i}"), label, axes, 32.0).unwrap());
        }
    }
    Dataset::new(samples)
}

fn small_bovw() -> BovwMethod {
    BovwMethod {
        variant: RpVariant::Rgb,
        descriptor: DescriptorSpec::new(DescriptorKind::RgbSift),
        codebook_size: 24,
        ..BovwMethod::default()
    }
}

#[test]
fn separable_gaussian_features_reach_perfect_accuracy() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let classes: Vec<String> = (0..12).map(|c| format!("c{c:02}")).collect();
    let mut samples = Vec::new();
    let mut features = Vec::new();
    for c in 0..12 {
        for i in 0..20 {
            let axes = [vec![0.0; 4], vec![0.0; 4], vec![0.0; 4]];
            samples.push(SensorSample::new(format!("{c}-{i}"), &classes[c], axes, 32.0).unwrap());
            let mut f: Vec<f64> = (0..12).map(|_| noise.sample(&mut rng)).collect();
            f[c] += 10.0;
            features.push(Some(f));
        }
    }
    let ds = Dataset::new(samples);
    let plan = make_splits(&ds, 10, 10, 7).unwrap();
    let labels = ds.label_indices();
    let report = evaluate_features(
        "gauss",
        &features,
        &labels,
        ds.classes(),
        &plan,
        &Default::default(),
        true,
        0.05,
    )
    .unwrap();
    assert_eq!(report.mean_accuracy, 1.0);
    assert_eq!(report.half_width, Some(0.0));
    for run in &report.runs {
        assert_eq!(run.confusion.total(), 120);
        for c in 0..12 {
            assert_eq!(run.confusion.row_total(c), 10);
        }
    }
}

#[test]
fn baseline_experiment_is_deterministic_and_accurate() {
    let ds = sensor_dataset(14, 1);
    let plan = make_splits(&ds, 10, 3, 42).unwrap();
    let method = MethodSpec::baseline(BaselineKind::Bands(Transform::Dft));
    let a = run_experiment(&ds, &method, &plan, &ExperimentOptions::default()).unwrap();
    let b = run_experiment(&ds, &method, &plan, &ExperimentOptions::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.accuracy_table(), b.accuracy_table());
    assert!(a.mean_accuracy > 0.9, "{}", a.summary());
    let same = paired_class_test(&a, &a, 0.05).unwrap();
    assert_eq!(same.verdict, Verdict::NoDifference);
}

#[test]
fn bovw_experiment_separates_textures() {
    let ds = sensor_dataset(13, 2);
    let plan = make_splits(&ds, 10, 2, 5).unwrap();
    let method = MethodSpec::bovw(small_bovw());
    let report = run_experiment(&ds, &method, &plan, &ExperimentOptions::default()).unwrap();
    assert_eq!(report.method_id, "rp-rgb/bovw24-rgb_sift/soft150/maxspm1-2-4");
    assert!(report.mean_accuracy > 0.6, "{}", report.summary());
    for run in &report.runs {
        assert_eq!(run.excluded, 0);
        assert_eq!(run.confusion.total(), 9);
    }
}

#[test]
fn short_samples_are_excluded_and_counted() {
    let mut samples = sensor_dataset(12, 9).samples().to_vec();
    // 12 points embed to a 10x10 plot, smaller than one 16-pixel patch
    samples.push(SensorSample::new("sway-short", "sway", [vec![0.1; 12], vec![0.2; 12], vec![0.3; 12]], 32.0).unwrap());
    let ds = Dataset::new(samples);
    let plan = make_splits(&ds, 10, 2, 11).unwrap();
    let mut m = small_bovw();
    m.bovw = BovwConfig {
        pooling: Pooling::Max,
        ..BovwConfig::default()
    };
    let report = run_experiment(&ds, &MethodSpec::bovw(m), &plan, &ExperimentOptions::default()).unwrap();
    let short = ds.samples().iter().position(|s| s.id() == "sway-short").unwrap();
    for (run, split) in report.runs.iter().zip(&plan.runs) {
        assert_eq!(run.excluded, 1);
        let in_test = split.test.contains(&short) as usize;
        assert_eq!(run.confusion.total(), split.test.len() - in_test);
    }
}

#[test]
fn descriptor_cache_does_not_change_results() {
    let ds = sensor_dataset(11, 4);
    let plan = make_splits(&ds, 10, 1, 8).unwrap();
    let method = MethodSpec::bovw(small_bovw());
    let dir = tempfile::tempdir().unwrap();
    let opts = ExperimentOptions {
        cache: Some(DescriptorCache::new(dir.path())),
    };
    let cold = run_experiment(&ds, &method, &plan, &opts).unwrap();
    let files = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(files, ds.len());
    let warm = run_experiment(&ds, &method, &plan, &opts).unwrap();
    let plain = run_experiment(&ds, &method, &plan, &ExperimentOptions::default()).unwrap();
    assert_eq!(cold, warm);
    assert_eq!(cold, plain);
    assert!(cold.half_width.is_none());
}

#[test]
fn f32_pipeline_runs() {
    let ds64 = sensor_dataset(11, 6);
    let samples: Vec<SensorSample<f32>> = ds64
        .samples()
        .iter()
        .map(|s| {
            let axes = s.axes().clone().map(|a| a.iter().map(|&v| v as f32).collect());
            SensorSample::new(s.id(), s.label(), axes, 32.0).unwrap()
        })
        .collect();
    let ds = Dataset::new(samples);
    let plan = make_splits(&ds, 10, 1, 8).unwrap();
    let report = run_experiment(&ds, &MethodSpec::bovw(small_bovw()), &plan, &ExperimentOptions::default()).unwrap();
    assert!(report.mean_accuracy > 0.5);
}
