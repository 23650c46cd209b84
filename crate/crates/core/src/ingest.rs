//! Sensor recordings, WHARF decoding and the canonical CSV interchange format.
//!
//! WHARF stores each recording as a text file of whitespace-separated 6-bit
//! coded triplets, one triplet per line. Values are decoded to m/s² with the
//! affine map of `[0, 63]` onto `[-1.5g, +1.5g]`.
//!
//! The canonical interchange is one CSV file per recording (`label,x,y,z`
//! header, decimal values) plus a `manifest.json` with class counts and
//! lengths.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Standard gravity used by the WHARF decoding.
pub const GRAVITY: f64 = 9.81;
/// WHARF sampling frequency.
pub const WHARF_SAMPLE_RATE_HZ: f64 = 32.0;
/// Largest 6-bit code.
pub const MAX_CODE: i64 = 63;
pub const MANIFEST_FILE: &str = "manifest.json";

/// One tri-axial recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSample<T = f64> {
    id: String,
    label: String,
    axes: [Vec<T>; 3],
    sample_rate_hz: f64,
}

impl<T: Real> SensorSample<T> {
    pub fn new(
        id: impl Into<String>,
        label: impl AsRef<str>,
        axes: [Vec<T>; 3],
        sample_rate_hz: f64,
    ) -> Result<Self> {
        let n = axes[0].len();
        if n == 0 {
            return Err(Error::Empty("recording has no samples".into()));
        }
        if axes[1].len() != n || axes[2].len() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: if axes[1].len() != n {
                    axes[1].len()
                } else {
                    axes[2].len()
                },
            });
        }
        if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        Ok(Self {
            id: id.into(),
            label: normalize_label(label.as_ref()),
            axes,
            sample_rate_hz,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn axes(&self) -> &[Vec<T>; 3] {
        &self.axes
    }

    pub fn axis(&self, index: usize) -> &[T] {
        &self.axes[index]
    }

    pub fn len(&self) -> usize {
        self.axes[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// Per-timestep Euclidean norm of the three axes.
    pub fn magnitude(&self) -> Vec<T> {
        let [x, y, z] = &self.axes;
        x.iter()
            .zip(y)
            .zip(z)
            .map(|((&a, &b), &c)| (a * a + b * b + c * c).sqrt())
            .collect()
    }
}

/// A labelled collection of recordings with a sorted, duplicate-free class list.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T = f64> {
    samples: Vec<SensorSample<T>>,
    classes: Vec<String>,
}

impl<T: Real> Dataset<T> {
    pub fn new(samples: Vec<SensorSample<T>>) -> Self {
        let classes: BTreeSet<String> = samples.iter().map(|s| s.label.clone()).collect();
        Self {
            samples,
            classes: classes.into_iter().collect(),
        }
    }

    pub fn samples(&self) -> &[SensorSample<T>] {
        &self.samples
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.binary_search_by(|c| c.as_str().cmp(label)).ok()
    }

    /// Class index of every sample, in sample order.
    pub fn label_indices(&self) -> Vec<usize> {
        self.samples
            .iter()
            .map(|s| self.class_index(&s.label).expect("label listed in classes"))
            .collect()
    }

    /// Number of samples per class, in class order.
    pub fn class_counts(&self) -> Vec<(String, usize)> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for s in &self.samples {
            *counts.entry(&s.label).or_default() += 1;
        }
        self.classes
            .iter()
            .map(|c| (c.clone(), counts.get(c.as_str()).copied().unwrap_or(0)))
            .collect()
    }
}

/// Lowercase snake_case form of a class name: `"Brush Teeth"` → `"brush_teeth"`.
pub fn normalize_label(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for ch in raw.trim().chars() {
        if ch.is_alphanumeric() {
            out.extend(ch.to_lowercase());
        } else if !out.ends_with('_') && !out.is_empty() {
            out.push('_');
        }
    }
    while out.ends_with('_') {
        out.pop();
    }
    out
}

/// Decodes a 6-bit WHARF code to m/s².
pub fn decode_coded<T: Real>(coded: i64) -> Result<T> {
    if !(0..=MAX_CODE).contains(&coded) {
        return Err(Error::CodedValue(coded));
    }
    let g = T::lit(GRAVITY);
    let step = T::lit(3.0) * g / T::lit(MAX_CODE as f64);
    Ok(T::lit(-1.5) * g + T::lit(coded as f64) * step)
}

/// Loads a WHARF directory tree.
///
/// Recordings are the `.txt` files found either directly under `root` or
/// one level down in per-class directories. Directories whose name ends in
/// `_MODEL` hold duplicated modelling data and are skipped, as are
/// `README`/`MANUAL` files.
pub fn load_wharf<T: Real>(root: impl AsRef<Path>) -> Result<Dataset<T>> {
    let root = root.as_ref();
    let mut samples = Vec::new();
    for entry in sorted_entries(root)? {
        if entry.is_dir() {
            let dir_name = file_name(&entry);
            if dir_name.ends_with("_MODEL") || dir_name.starts_with('.') {
                continue;
            }
            let label = normalize_label(&dir_name);
            for file in sorted_entries(&entry)? {
                if is_recording(&file) {
                    samples.push(read_wharf_file(&file, &label)?);
                }
            }
        } else if is_recording(&entry) {
            let label = label_from_file_name(&entry);
            samples.push(read_wharf_file(&entry, &label)?);
        }
    }
    Ok(Dataset::new(samples))
}

/// Returns a dataset without the samples whose label is in `drop`.
pub fn filter_classes<T: Real, S: AsRef<str>>(ds: &Dataset<T>, drop: &[S]) -> Dataset<T> {
    let drop: BTreeSet<String> = drop.iter().map(|d| normalize_label(d.as_ref())).collect();
    Dataset::new(
        ds.samples
            .iter()
            .filter(|s| !drop.contains(&s.label))
            .cloned()
            .collect(),
    )
}

/// Parses one WHARF recording.
pub fn read_wharf_file<T: Real>(path: &Path, label: &str) -> Result<SensorSample<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut axes: [Vec<T>; 3] = Default::default();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0;
        for token in line.split_whitespace() {
            let code: i64 = token.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("expected integer, found {token:?}"),
            })?;
            if count >= 3 {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno,
                    message: "more than three values on line".into(),
                });
            }
            let value = decode_coded(code).map_err(|_| Error::CodedRange {
                path: path.to_path_buf(),
                line: lineno,
                value: code,
            })?;
            axes[count].push(value);
            count += 1;
        }
        if count != 3 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("expected three values, found {count}"),
            });
        }
    }
    if axes[0].is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "recording is empty".into(),
        });
    }
    SensorSample::new(file_stem(path), label, axes, WHARF_SAMPLE_RATE_HZ)
}

fn is_recording(path: &Path) -> bool {
    if !path.is_file() || path.extension().and_then(|e| e.to_str()) != Some("txt") {
        return false;
    }
    let stem = file_stem(path).to_ascii_uppercase();
    !(stem.starts_with("README") || stem.starts_with("MANUAL"))
}

/// WHARF file names look like `Accelerometer-2011-04-11-13-28-18-brush_teeth-f1.txt`;
/// the activity is the eighth dash-separated field. Anything else falls back
/// to the file stem.
fn label_from_file_name(path: &Path) -> String {
    let stem = file_stem(path);
    let parts: Vec<&str> = stem.split('-').collect();
    if parts.len() >= 9 && parts[0].eq_ignore_ascii_case("accelerometer") {
        normalize_label(parts[7])
    } else {
        normalize_label(&stem)
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    entries.sort();
    Ok(entries)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub version: u32,
    pub sample_rate_hz: f64,
    pub classes: Vec<ClassCount>,
    pub samples: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ClassCount {
    pub label: String,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub label: String,
    pub length: usize,
    pub sample_rate_hz: f64,
    pub file: String,
}

impl Manifest {
    pub fn describe<T: Real>(ds: &Dataset<T>) -> Self {
        let samples: Vec<ManifestEntry> = ds
            .samples
            .iter()
            .map(|s| ManifestEntry {
                id: s.id.clone(),
                label: s.label.clone(),
                length: s.len(),
                sample_rate_hz: s.sample_rate_hz,
                file: format!("{}/{}.csv", s.label, s.id),
            })
            .collect();
        Manifest {
            version: 1,
            sample_rate_hz: ds
                .samples
                .first()
                .map(|s| s.sample_rate_hz)
                .unwrap_or(WHARF_SAMPLE_RATE_HZ),
            classes: ds
                .class_counts()
                .into_iter()
                .map(|(label, count)| ClassCount { label, count })
                .collect(),
            samples,
        }
    }
}

/// Writes `ds` as one CSV per sample under `dir/<label>/<id>.csv` plus a manifest.
pub fn write_canonical<T: Real>(ds: &Dataset<T>, dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    let manifest = Manifest::describe(ds);
    let mut seen = BTreeSet::new();
    for (sample, entry) in ds.samples.iter().zip(&manifest.samples) {
        if !seen.insert(entry.file.clone()) {
            return Err(Error::InvalidParameter(format!(
                "duplicate sample id {:?} in class {:?}",
                sample.id, sample.label
            )));
        }
        let path = dir.join(&entry.file);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        write_sample_csv(sample, &path)?;
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::format("manifest", e.to_string()))?;
    fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest)
}

pub fn write_sample_csv<T: Real>(sample: &SensorSample<T>, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "label,x,y,z").map_err(io)?;
    let [x, y, z] = &sample.axes;
    for i in 0..sample.len() {
        writeln!(out, "{},{},{},{}", sample.label, x[i], y[i], z[i]).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Reads a single `label,x,y,z` file. The sample id is the file stem.
pub fn read_sample_csv<T: Real>(path: &Path, sample_rate_hz: f64) -> Result<SensorSample<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "label,x,y,z" => {}
        _ => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: "expected header `label,x,y,z`".into(),
            })
        }
    }
    let mut label: Option<String> = None;
    let mut axes: [Vec<T>; 3] = Default::default();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", fields.len())));
        }
        match &label {
            None => label = Some(fields[0].to_string()),
            Some(l) if l != fields[0] => {
                return Err(bad(format!("label {:?} differs from {:?}", fields[0], l)))
            }
            _ => {}
        }
        for (axis, field) in axes.iter_mut().zip(&fields[1..]) {
            let v: T = field
                .trim()
                .parse()
                .map_err(|_| bad(format!("expected number, found {field:?}")))?;
            axis.push(v);
        }
    }
    let label = label.ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: "no data rows".into(),
    })?;
    SensorSample::new(file_stem(path), label, axes, sample_rate_hz)
}

/// Loads a canonical dataset directory.
///
/// With a manifest the listed files are read in manifest order; without one,
/// every `.csv` file under `dir` (one level of subdirectories) is read in
/// path order using `default_rate_hz`.
pub fn load_canonical<T: Real>(dir: impl AsRef<Path>, default_rate_hz: f64) -> Result<Dataset<T>> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST_FILE);
    if manifest_path.is_file() {
        let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::format("manifest", e.to_string()))?;
        let samples = manifest
            .samples
            .iter()
            .map(|entry| {
                let mut s = read_sample_csv::<T>(&dir.join(&entry.file), entry.sample_rate_hz)?;
                s.id = entry.id.clone();
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(Dataset::new(samples));
    }
    let mut samples = Vec::new();
    for entry in sorted_entries(dir)? {
        if entry.is_dir() {
            for file in sorted_entries(&entry)? {
                if file.extension().and_then(|e| e.to_str()) == Some("csv") {
                    samples.push(read_sample_csv(&file, default_rate_hz)?);
                }
            }
        } else if entry.extension().and_then(|e| e.to_str()) == Some("csv") {
            samples.push(read_sample_csv(&entry, default_rate_hz)?);
        }
    }
    Ok(Dataset::new(samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write(path: &Path, text: &str) {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, text).unwrap();
    }

    fn triplets(n: usize) -> String {
        (0..n).map(|i| format!("{} {} {}\n", i % 64, (i * 7) % 64, 63 - i % 64)).collect()
    }

    #[test]
    fn decode_endpoints() {
        assert!((decode_coded::<f64>(0).unwrap() + 14.715).abs() < 1e-12);
        assert!((decode_coded::<f64>(63).unwrap() - 14.715).abs() < 1e-12);
    }

    #[test]
    fn decode_straddles_zero() {
        let a = decode_coded::<f64>(31).unwrap();
        let b = decode_coded::<f64>(32).unwrap();
        assert!(a < 0.0 && b > 0.0);
        assert!((b - a - 3.0 * GRAVITY / 63.0).abs() < 1e-12);
    }

    #[test]
    fn decode_rejects_out_of_range() {
        assert!(matches!(decode_coded::<f64>(64), Err(Error::CodedValue(64))));
        assert!(matches!(decode_coded::<f64>(-1), Err(Error::CodedValue(-1))));
    }

    #[test]
    fn decode_is_affine() {
        let step = decode_coded::<f64>(1).unwrap() - decode_coded::<f64>(0).unwrap();
        for a in 0..63 {
            let d = decode_coded::<f64>(a + 1).unwrap() - decode_coded::<f64>(a).unwrap();
            assert!((d - step).abs() < 1e-12);
        }
    }

    #[test]
    fn labels_are_snake_case() {
        assert_eq!(normalize_label("Brush_teeth"), "brush_teeth");
        assert_eq!(normalize_label("Eat Meat"), "eat_meat");
        assert_eq!(normalize_label("  sit--down chair "), "sit_down_chair");
    }

    #[test]
    fn empty_directory_gives_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let ds = load_wharf::<f64>(dir.path()).unwrap();
        assert_eq!(ds.len(), 0);
        assert!(ds.classes().is_empty());
    }

    #[test]
    fn single_root_file_keeps_its_length() {
        let dir = tempfile::tempdir().unwrap();
        write(
            &dir.path().join("Accelerometer-2011-04-11-13-28-18-brush_teeth-f1.txt"),
            &triplets(100),
        );
        let ds = load_wharf::<f64>(dir.path()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.samples()[0].len(), 100);
        assert_eq!(ds.samples()[0].label(), "brush_teeth");
        assert_eq!(ds.samples()[0].sample_rate_hz(), 32.0);
    }

    #[test]
    fn class_directories_and_model_dirs() {
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("Walk/a.txt"), &triplets(20));
        write(&dir.path().join("Walk/b.txt"), &triplets(30));
        write(&dir.path().join("Eat_meat/c.txt"), &triplets(25));
        write(&dir.path().join("Walk_MODEL/d.txt"), &triplets(25));
        write(&dir.path().join("MANUAL.txt"), "free text");
        let ds = load_wharf::<f64>(dir.path()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.classes(), ["eat_meat", "walk"]);
        let kept = filter_classes(&ds, &["eat meat"]);
        assert_eq!(kept.len(), 2);
        assert_eq!(kept.classes(), ["walk"]);
        assert_eq!(filter_classes(&ds, &[] as &[&str]), ds);
        assert!(filter_classes(&ds, &["walk", "eat_meat"]).is_empty());
        assert_eq!(filter_classes(&ds, &["not_a_class"]), ds);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("Walk/bad.txt");
        write(&path, "1 2 3\n4 x 6\n");
        match load_wharf::<f64>(dir.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        write(&path, "1 2 3\n4 5 64\n");
        match load_wharf::<f64>(dir.path()) {
            Err(Error::CodedRange { line, value, .. }) => assert_eq!((line, value), (2, 64)),
            other => panic!("unexpected {other:?}"),
        }
        write(&path, "1 2\n");
        assert!(matches!(load_wharf::<f64>(dir.path()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn missing_root_is_io_error() {
        assert!(matches!(
            load_wharf::<f64>("/nonexistent/wharf/root"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn rejects_ragged_axes() {
        let r = SensorSample::<f64>::new("a", "walk", [vec![1.0, 2.0], vec![1.0], vec![1.0, 2.0]], 32.0);
        assert!(r.is_err());
        let r = SensorSample::<f64>::new("a", "walk", [vec![1.0], vec![1.0], vec![1.0]], 0.0);
        assert!(r.is_err());
    }

    #[test]
    fn csv_without_manifest() {
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("one.csv"), "label,x,y,z\nwalk,1,2,3\nwalk,4,5,6\n");
        let ds = load_canonical::<f32>(dir.path(), 50.0).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.samples()[0].axis(2), &[3.0f32, 6.0]);
        assert_eq!(ds.samples()[0].sample_rate_hz(), 50.0);
        write(&dir.path().join("two.csv"), "label,x,y,z\nwalk,1,2,3\nrun,4,5,6\n");
        assert!(load_canonical::<f32>(dir.path(), 50.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn canonical_round_trip_is_bit_exact(
            raw in prop::collection::vec((any::<f64>(), any::<f64>(), any::<f64>()), 1..40),
            scale in 1e-6f64..1e6,
        ) {
            let clean = |v: f64| if v.is_finite() { v * scale } else { 0.5 };
            let axes = [
                raw.iter().map(|t| clean(t.0)).collect(),
                raw.iter().map(|t| clean(t.1)).collect(),
                raw.iter().map(|t| clean(t.2)).collect(),
            ];
            let ds = Dataset::new(vec![
                SensorSample::new("s1", "walk", axes, 32.0).unwrap(),
            ]);
            let dir = tempfile::tempdir().unwrap();
            write_canonical(&ds, dir.path()).unwrap();
            let back = load_canonical::<f64>(dir.path(), 1.0).unwrap();
            prop_assert_eq!(back.len(), 1);
            for a in 0..3 {
                let lhs: Vec<u64> = ds.samples()[0].axis(a).iter().map(|v| v.to_bits()).collect();
                let rhs: Vec<u64> = back.samples()[0].axis(a).iter().map(|v| v.to_bits()).collect();
                prop_assert_eq!(lhs, rhs);
            }
            prop_assert_eq!(back.samples()[0].id(), "s1");
        }
    }
}
