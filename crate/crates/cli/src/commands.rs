use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rphar::eval::figures::{contact_sheet_png, write_confusion_heatmap, write_paired_test};
use rphar::eval::{
    baseline_matrix, bovw_run_features, make_splits, paired_class_test, run_experiment,
    EvalReport, ExperimentOptions, FeaturePath, PairedTest,
};
use rphar::descriptors::cache::DescriptorCache;
use rphar::ingest::{filter_classes, load_canonical, load_wharf, write_canonical, Manifest};
use rphar::rp::{render_variant, RpConfig};
use rphar::{Dataset64, Error};
use serde::{Deserialize, Serialize};

use crate::config::{expand_sweep, DatasetFormat, ExperimentConfig, SweepAxis};
use crate::error::{CliError, CliResult, Context};

fn io<T>(path: &Path, r: std::io::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::io(path, e))
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))
}

pub fn load_dataset(
    path: &Path,
    format: DatasetFormat,
    sample_rate_hz: f64,
    drop: &[String],
) -> CliResult<Dataset64> {
    let ds = match format {
        DatasetFormat::Canonical => load_canonical(path, sample_rate_hz),
        DatasetFormat::Wharf => load_wharf(path),
    }
    .context(|| format!("loading {}", path.display()))?;
    let ds = if drop.is_empty() { ds } else { filter_classes(&ds, drop) };
    if ds.is_empty() {
        return Err(CliError::Core {
            context: format!("loading {}", path.display()),
            source: Error::Empty("no samples left after loading".into()),
        });
    }
    Ok(ds)
}

/// Class table with counts and a total line.
pub fn class_table(manifest: &Manifest) -> String {
    let width = manifest
        .classes
        .iter()
        .map(|c| c.label.len())
        .max()
        .unwrap_or(5)
        .max(5);
    let mut s = format!("{:<width$}  {:>7}\n", "class", "samples");
    for c in &manifest.classes {
        s.push_str(&format!("{:<width$}  {:>7}\n", c.label, c.count));
    }
    s.push_str(&format!("{:<width$}  {:>7}\n", "total", manifest.samples.len()));
    s
}

pub struct IngestRequest {
    pub input: PathBuf,
    pub format: DatasetFormat,
    pub output: PathBuf,
    pub drop: Vec<String>,
    pub sample_rate_hz: f64,
}

pub fn cmd_ingest(req: &IngestRequest, out: &mut dyn Write) -> CliResult<Manifest> {
    let ds = load_dataset(&req.input, req.format, req.sample_rate_hz, &req.drop)?;
    let manifest = write_canonical(&ds, &req.output)
        .context(|| format!("writing {}", req.output.display()))?;
    emit(out, &class_table(&manifest))?;
    Ok(manifest)
}

pub struct RenderRequest {
    pub dataset: PathBuf,
    pub format: DatasetFormat,
    pub sample_rate_hz: f64,
    pub output: PathBuf,
    pub variant: rphar::RpVariant,
    pub rp: RpConfig,
    /// Sample ids to render; empty renders all.
    pub samples: Vec<String>,
    /// Per-class contact sheets with up to this many plots.
    pub gallery: Option<usize>,
    pub columns: usize,
}

/// Writes `<id>.png` per sample; too-short samples are skipped with a warning.
pub fn cmd_render_rp(req: &RenderRequest, out: &mut dyn Write) -> CliResult<Vec<PathBuf>> {
    req.rp.validate().context(|| "invalid plot settings".into())?;
    let ds = load_dataset(&req.dataset, req.format, req.sample_rate_hz, &[])?;
    for id in &req.samples {
        if !ds.samples().iter().any(|s| s.id() == id) {
            return Err(CliError::Usage(format!("no sample with id {id:?}")));
        }
    }
    io(&req.output, fs::create_dir_all(&req.output))?;
    let mut written = Vec::new();
    let mut by_class: BTreeMap<&str, Vec<rphar::RpImage>> = BTreeMap::new();
    for s in ds.samples() {
        if !req.samples.is_empty() && !req.samples.iter().any(|id| id == s.id()) {
            continue;
        }
        let img = match render_variant(s, req.variant, &req.rp) {
            Ok(img) => img,
            Err(e @ Error::Length { .. }) => {
                warn!("{}: skipped, {e}", s.id());
                emit(out, &format!("skipped {}: {e}\n", s.id()))?;
                continue;
            }
            Err(e) => return Err(e).context(|| format!("rendering {}", s.id())),
        };
        let path = req.output.join(format!("{}.png", s.id()));
        img.write_png(&path).context(|| format!("writing {}", path.display()))?;
        written.push(path);
        if let Some(n) = req.gallery {
            let sheet = by_class.entry(s.label()).or_default();
            if sheet.len() < n {
                sheet.push(img);
            }
        }
    }
    for (label, images) in by_class {
        if images.is_empty() {
            continue;
        }
        let path = req.output.join(format!("gallery_{label}.png"));
        let png = contact_sheet_png(&images, req.columns).context(|| format!("gallery {label}"))?;
        io(&path, fs::write(&path, png))?;
        written.push(path);
    }
    emit(out, &format!("wrote {} file(s) to {}\n", written.len(), req.output.display()))?;
    Ok(written)
}

/// Feature matrix of every sample under one run's split: one CSV row per
/// sample with its id, label, split role and values.
pub fn cmd_extract(
    config: &ExperimentConfig,
    run: usize,
    output: &Path,
    out: &mut dyn Write,
) -> CliResult<usize> {
    let method = config.method_spec()?;
    if run >= config.runs {
        return Err(CliError::Usage(format!("run {run} is outside 0..{}", config.runs)));
    }
    let ds = load_dataset(&config.dataset, config.format, config.sample_rate_hz, &config.drop)?;
    let plan = make_splits(&ds, config.per_class, config.runs, config.master_seed)
        .context(|| "building splits".into())?;
    let split = &plan.runs[run];
    let opts = ExperimentOptions {
        cache: DescriptorCache::from_env(),
    };
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        io(parent, fs::create_dir_all(parent))?;
    }
    let features = match &method.features {
        FeaturePath::Baseline(kind) => baseline_matrix(&ds, *kind).context(|| "baseline features".into())?,
        FeaturePath::Bovw(m) => {
            let (codebook, features) = bovw_run_features(&ds, m, split, run, &opts)
                .context(|| "bag-of-words features".into())?;
            let path = output.with_extension("codebook.csv");
            codebook.save(&path).context(|| format!("writing {}", path.display()))?;
            features
        }
    };
    let dim = features.iter().flatten().map(Vec::len).next().unwrap_or(0);
    let mut role = vec!["test"; ds.len()];
    for &i in &split.train {
        role[i] = "train";
    }
    let mut csv = String::from("id,label,split");
    for j in 0..dim {
        csv.push_str(&format!(",f{j}"));
    }
    csv.push('\n');
    let mut rows = 0;
    for (i, (s, f)) in ds.samples().iter().zip(&features).enumerate() {
        let Some(f) = f else {
            warn!("{}: no features, omitted", s.id());
            continue;
        };
        csv.push_str(&format!("{},{},{}", s.id(), s.label(), role[i]));
        for v in f {
            csv.push_str(&format!(",{v}"));
        }
        csv.push('\n');
        rows += 1;
    }
    io(output, fs::write(output, csv))?;
    emit(out, &format!("{}: {rows} x {dim} features for run {run}\n", method.id()))?;
    Ok(rows)
}

/// Seeds and hashes that pin a run down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamp {
    pub tool_version: String,
    pub config_hash: String,
    pub method_id: String,
    pub master_seed: u64,
    pub codebook_seed: u64,
    pub classifier_seed: u64,
    pub plan_fingerprint: String,
}

pub const STAMP_FILE: &str = "stamp.json";
pub const REPORT_FILE: &str = "report.json";
pub const ACCURACY_FILE: &str = "accuracy.csv";

pub fn confusion_csv(report: &EvalReport) -> String {
    let m = report.pooled_confusion();
    let mut s = String::from("truth");
    for c in &report.classes {
        s.push_str(&format!(",{c}"));
    }
    s.push('\n');
    for (c, row) in report.classes.iter().zip(&m.counts) {
        s.push_str(c);
        for v in row {
            s.push_str(&format!(",{v}"));
        }
        s.push('\n');
    }
    s
}

/// Report text, tables and heatmaps into `dir`.
pub fn write_report_files(report: &EvalReport, dir: &Path) -> CliResult<()> {
    let put = |name: &str, text: String| {
        let p = dir.join(name);
        io(&p, fs::write(&p, text))
    };
    put(ACCURACY_FILE, report.accuracy_table())?;
    put("summary.txt", report.summary())?;
    put("confusion.csv", confusion_csv(report))?;
    let heat = |m: &rphar::eval::ConfusionMatrix, name: String| {
        let p = dir.join(name);
        write_confusion_heatmap(m, &p).context(|| format!("writing {}", p.display()))
    };
    heat(&report.pooled_confusion(), "confusion.png".into())?;
    for (r, run) in report.runs.iter().enumerate() {
        heat(&run.confusion, format!("confusion_run{r:02}.png"))?;
    }
    Ok(())
}

fn staging_dir(output: &Path) -> PathBuf {
    let name = output
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    output.with_file_name(format!(".{name}.partial"))
}

/// Replaces `output` with `staged`, refusing to clobber a directory that
/// does not hold an earlier run.
fn publish(staged: &Path, output: &Path) -> CliResult<()> {
    if output.exists() {
        let ours = output.join(STAMP_FILE).is_file();
        let empty = output.read_dir().map(|mut d| d.next().is_none()).unwrap_or(false);
        if !ours && !empty {
            return Err(CliError::Usage(format!(
                "{} exists and is not an earlier run output",
                output.display()
            )));
        }
        io(output, fs::remove_dir_all(output))?;
    }
    io(output, fs::rename(staged, output))
}

fn run_one(config: &ExperimentConfig, output: &Path) -> CliResult<EvalReport> {
    let method = config.method_spec()?;
    let ds = load_dataset(&config.dataset, config.format, config.sample_rate_hz, &config.drop)?;
    let plan = make_splits(&ds, config.per_class, config.runs, config.master_seed)
        .context(|| "building splits".into())?;
    let opts = ExperimentOptions {
        cache: DescriptorCache::from_env(),
    };
    info!("{}: {} samples, {} classes, {} run(s)", method.id(), ds.len(), ds.classes().len(), config.runs);
    let staged = staging_dir(output);
    if staged.exists() {
        io(&staged, fs::remove_dir_all(&staged))?;
    }
    io(&staged, fs::create_dir_all(&staged))?;
    let result = (|| {
        let report = run_experiment(&ds, &method, &plan, &opts).context(|| method.id())?;
        report
            .save(staged.join(REPORT_FILE))
            .context(|| "writing report".into())?;
        write_report_files(&report, &staged)?;
        config.save(staged.join("config.toml"))?;
        let stamp = Stamp {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config.hash(),
            method_id: report.method_id.clone(),
            master_seed: config.master_seed,
            codebook_seed: config.codebook_seed,
            classifier_seed: config.classifier_seed,
            plan_fingerprint: report.plan_fingerprint.clone(),
        };
        let p = staged.join(STAMP_FILE);
        io(&p, fs::write(&p, serde_json::to_string_pretty(&stamp).expect("stamp serializes") + "\n"))?;
        publish(&staged, output)?;
        Ok(report)
    })();
    if result.is_err() && staged.exists() {
        let _ = fs::remove_dir_all(&staged);
    }
    result
}

/// Runs one config or every point of a sweep. Sweep points land in
/// `<output>/<label>` with a `sweep.csv` summary at the root.
pub fn cmd_run(
    config: &ExperimentConfig,
    sweep: &[SweepAxis],
    out: &mut dyn Write,
) -> CliResult<Vec<(String, EvalReport)>> {
    if sweep.is_empty() {
        let report = run_one(config, &config.output)?;
        emit(out, &report.summary())?;
        emit(out, &format!("config hash {}\n", config.hash()))?;
        return Ok(vec![(String::new(), report)]);
    }
    let points = expand_sweep(config, sweep)?;
    for p in &points {
        p.config.method_spec()?;
    }
    io(&config.output, fs::create_dir_all(&config.output))?;
    let mut results = Vec::with_capacity(points.len());
    let mut table = String::from("point,method,mean_accuracy,half_width\n");
    for p in points {
        let dir = config.output.join(&p.label);
        let report = run_one(&p.config, &dir)?;
        let hw = report
            .half_width
            .map(|h| format!("{h:.6}"))
            .unwrap_or_else(|| "single_run".into());
        table.push_str(&format!("{},{},{:.6},{hw}\n", p.label, report.method_id, report.mean_accuracy));
        emit(out, &format!("{}: {:.2}%\n", p.label, 100.0 * report.mean_accuracy))?;
        results.push((p.label, report));
    }
    let path = config.output.join("sweep.csv");
    io(&path, fs::write(&path, table))?;
    Ok(results)
}

fn load_report(path: &Path) -> CliResult<EvalReport> {
    let path = if path.is_dir() { path.join(REPORT_FILE) } else { path.to_path_buf() };
    EvalReport::load(&path).context(|| format!("reading {}", path.display()))
}

pub fn cmd_compare(
    a: &Path,
    b: &Path,
    alpha: f64,
    plot: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult<PairedTest> {
    let (ra, rb) = (load_report(a)?, load_report(b)?);
    let test = paired_class_test(&ra, &rb, alpha).context(|| "paired test".into())?;
    let mut s = format!("A: {}\nB: {}\n", ra.method_id, rb.method_id);
    s.push_str(&format!(
        "mean per-class difference (A - B): {:+.4} ± {:.4} ({:.0}% CI, {} classes)\n",
        test.mean_diff,
        test.half_width,
        100.0 * (1.0 - alpha),
        test.differences.len()
    ));
    s.push_str(&format!("verdict: {}\n", test.verdict.name()));
    emit(out, &s)?;
    if let Some(p) = plot {
        write_paired_test(&test, p).context(|| format!("writing {}", p.display()))?;
    }
    Ok(test)
}

/// Re-renders tables and figures of a saved report.
pub fn cmd_report(report: &Path, output: Option<&Path>, out: &mut dyn Write) -> CliResult<EvalReport> {
    let r = load_report(report)?;
    let dir = match output {
        Some(d) => d.to_path_buf(),
        None if report.is_dir() => report.to_path_buf(),
        None => report.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    io(&dir, fs::create_dir_all(&dir))?;
    write_report_files(&r, &dir)?;
    emit(out, &r.summary())?;
    Ok(r)
}
