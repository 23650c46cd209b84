//! The flat experiment config file, flag overrides and sweep expansion.

use std::path::{Path, PathBuf};

use rphar::baseline::BaselineKind;
use rphar::bovw::{Assignment, BovwConfig, Pooling};
use rphar::classify::TrainConfig;
use rphar::descriptors::{DescriptorKind, DescriptorSpec, GridSpec};
use rphar::eval::{BovwMethod, MethodSpec};
use rphar::rp::{Polarity, RpConfig};
use rphar::RpVariant;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    /// Directory written by `rphar ingest`.
    Canonical,
    /// The raw WHARF distribution.
    Wharf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentMode {
    Hard,
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolingMode {
    Average,
    Max,
    MaxSpm,
}

/// Everything one experiment needs. Every key is optional in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub format: DatasetFormat,
    /// Classes removed after loading.
    pub drop: Vec<String>,
    /// Used for canonical directories without a manifest.
    pub sample_rate_hz: f64,
    /// `bovw` or a baseline name (`quantile`, `dftbands`, ...).
    pub method: String,
    pub variant: RpVariant,
    pub m: usize,
    pub d: usize,
    pub epsilon: Option<f64>,
    pub polarity: Polarity,
    pub descriptor: DescriptorKind,
    pub stride: usize,
    pub patch: usize,
    pub hist_bins: usize,
    pub codebook_size: usize,
    pub codebook_seed: u64,
    pub assignment: AssignmentMode,
    pub sigma: f64,
    pub pooling: PoolingMode,
    pub spm_levels: Vec<usize>,
    pub c: f64,
    pub epochs: usize,
    pub tolerance: f64,
    pub classifier_seed: u64,
    pub per_class: usize,
    pub runs: usize,
    pub master_seed: u64,
    pub alpha: f64,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let grid = GridSpec::default();
        Self {
            dataset: PathBuf::from("data"),
            format: DatasetFormat::Canonical,
            drop: vec!["eat_meat".into(), "eat_soup".into()],
            sample_rate_hz: rphar::ingest::WHARF_SAMPLE_RATE_HZ,
            method: "bovw".into(),
            variant: RpVariant::Rgb,
            m: 2,
            d: 2,
            epsilon: None,
            polarity: Polarity::DarkRecurrent,
            descriptor: DescriptorKind::RgbSift,
            stride: grid.stride,
            patch: grid.patch,
            hist_bins: rphar::descriptors::DEFAULT_HIST_BINS,
            codebook_size: 1000,
            codebook_seed: 0,
            assignment: AssignmentMode::Soft,
            sigma: 150.0,
            pooling: PoolingMode::MaxSpm,
            spm_levels: vec![1, 2, 4],
            c: train.c,
            epochs: train.epochs,
            tolerance: train.tolerance,
            classifier_seed: train.seed,
            per_class: 10,
            runs: 10,
            master_seed: 0,
            alpha: 0.05,
            output: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> CliResult<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> CliResult<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml()).map_err(|e| CliError::io(path, e))
    }

    /// Hex SHA-256 of the serialized config.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn rp(&self) -> RpConfig {
        RpConfig {
            m: self.m,
            d: self.d,
            epsilon: self.epsilon,
            polarity: self.polarity,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            c: self.c,
            epochs: self.epochs,
            seed: self.classifier_seed,
            tolerance: self.tolerance,
        }
    }

    pub fn bovw_method(&self) -> BovwMethod {
        BovwMethod {
            variant: self.variant,
            rp: self.rp(),
            descriptor: DescriptorSpec {
                kind: self.descriptor,
                grid: GridSpec {
                    stride: self.stride,
                    patch: self.patch,
                },
                hist_bins: self.hist_bins,
            },
            codebook_size: self.codebook_size,
            codebook_seed: self.codebook_seed,
            bovw: BovwConfig {
                assignment: match self.assignment {
                    AssignmentMode::Hard => Assignment::Hard,
                    AssignmentMode::Soft => Assignment::Soft { sigma: self.sigma },
                },
                pooling: match self.pooling {
                    PoolingMode::Average => Pooling::Average,
                    PoolingMode::Max => Pooling::Max,
                    PoolingMode::MaxSpm => Pooling::MaxSpm {
                        levels: self.spm_levels.clone(),
                    },
                },
            },
        }
    }

    /// Validated method description.
    pub fn method_spec(&self) -> CliResult<MethodSpec> {
        let mut spec = if self.method == "bovw" {
            let m = self.bovw_method();
            let bad = |e| Err(e).context(|| "invalid config".into());
            if let Err(e) = m.rp.validate() {
                return bad(e);
            }
            if let Err(e) = m.descriptor.grid.validate() {
                return bad(e);
            }
            if let Err(e) = m.bovw.validate() {
                return bad(e);
            }
            if m.codebook_size == 0 {
                return Err(CliError::Usage("codebook_size must be at least 1".into()));
            }
            if m.descriptor.kind == DescriptorKind::RgbHist && m.descriptor.hist_bins == 0 {
                return Err(CliError::Usage("hist_bins must be at least 1".into()));
            }
            MethodSpec::bovw(m)
        } else {
            let kind = BaselineKind::parse(&self.method).ok_or_else(|| {
                let names: Vec<&str> = BaselineKind::ALL.iter().map(|k| k.name()).collect();
                CliError::Usage(format!(
                    "unknown method {:?}; expected bovw or one of {}",
                    self.method,
                    names.join(", ")
                ))
            })?;
            MethodSpec::baseline(kind)
        };
        if !(self.c > 0.0) || self.epochs == 0 || !(self.tolerance > 0.0) {
            return Err(CliError::Usage("classifier needs c > 0, epochs >= 1, tolerance > 0".into()));
        }
        if self.per_class == 0 || self.runs == 0 {
            return Err(CliError::Usage("per_class and runs must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Usage(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        spec.classifier = self.train_config();
        spec.alpha = self.alpha;
        Ok(spec)
    }
}

/// One `key=v1,v2,...` axis of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<toml::Value>,
}

/// Splits on commas outside brackets so array values survive.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

fn parse_value(raw: &str) -> toml::Value {
    let raw = raw.trim();
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (key, values) = s
            .split_once('=')
            .ok_or_else(|| format!("sweep {s:?} is not key=v1,v2,..."))?;
        let key = key.trim().replace('-', "_");
        let values: Vec<toml::Value> = split_top_level(values)
            .into_iter()
            .filter(|v| !v.trim().is_empty())
            .map(parse_value)
            .collect();
        if values.is_empty() {
            return Err(format!("sweep {key} has no values"));
        }
        Ok(SweepAxis { key, values })
    }
}

fn value_label(v: &toml::Value) -> String {
    let raw = match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    raw.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect::<String>()
        .trim_matches('_')
        .to_string()
}

/// A config of the sweep with a directory-safe label such as
/// `codebook_size-100_sigma-50`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub label: String,
    pub config: ExperimentConfig,
}

/// Cross-product of `axes` applied on top of `base`, first axis outermost.
pub fn expand_sweep(base: &ExperimentConfig, axes: &[SweepAxis]) -> CliResult<Vec<SweepPoint>> {
    let table = toml::Table::try_from(base).expect("config serializes");
    let known: Vec<String> = toml::Table::try_from(ExperimentConfig::default())
        .expect("config serializes")
        .keys()
        .cloned()
        .chain(["epsilon".to_string()])
        .collect();
    for axis in axes {
        if !known.contains(&axis.key) {
            return Err(CliError::Usage(format!("cannot sweep unknown key {:?}", axis.key)));
        }
        if axis.key == "output" {
            return Err(CliError::Usage("cannot sweep the output directory".into()));
        }
    }
    let mut points = vec![(Vec::<String>::new(), table)];
    for axis in axes {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for (labels, table) in &points {
            for v in &axis.values {
                let mut t = table.clone();
                t.insert(axis.key.clone(), v.clone());
                let mut l = labels.clone();
                l.push(format!("{}-{}", axis.key, value_label(v)));
                next.push((l, t));
            }
        }
        points = next;
    }
    points
        .into_iter()
        .map(|(labels, table)| {
            let config: ExperimentConfig = table
                .try_into()
                .map_err(|e: toml::de::Error| CliError::Usage(format!("sweep value rejected: {e}")))?;
            Ok(SweepPoint {
                label: labels.join("_"),
                config,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_and_matches_best_configuration() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
        let m = c.method_spec().unwrap();
        assert_eq!(m.id(), "rp-rgb/bovw1000-rgb_sift/soft150/maxspm1-2-4");
        assert_eq!((c.per_class, c.runs, c.c), (10, 10, 1.0));
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = ExperimentConfig::from_toml("method = \"quantile\"\nepsilon = 0.25\n").unwrap();
        assert_eq!(c.method, "quantile");
        assert_eq!(c.epsilon, Some(0.25));
        assert_eq!(c.codebook_size, 1000);
        assert!(ExperimentConfig::from_toml("codebok_size = 3").is_err());
    }

    #[test]
    fn hash_tracks_every_field() {
        let base = ExperimentConfig::default();
        let mut other = base.clone();
        assert_eq!(base.hash(), other.hash());
        other.sigma = 150.000000001;
        assert_ne!(base.hash(), other.hash());
        other = base.clone();
        other.spm_levels = vec![1, 2];
        assert_ne!(base.hash(), other.hash());
    }

    #[test]
    fn sweep_expands_cross_product() {
        let axes: Vec<SweepAxis> = ["codebook_size=100,1000", "spm-levels=[1],[1,2,4]", "pooling=max,max_spm"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let points = expand_sweep(&ExperimentConfig::default(), &axes).unwrap();
        assert_eq!(points.len(), 8);
        assert_eq!(points[0].label, "codebook_size-100_spm_levels-1_pooling-max");
        assert_eq!(points[7].config.codebook_size, 1000);
        assert_eq!(points[7].config.spm_levels, vec![1, 2, 4]);
        assert_eq!(points[7].config.pooling, PoolingMode::MaxSpm);
        let bad: SweepAxis = "codebook=1".parse().unwrap();
        assert!(expand_sweep(&ExperimentConfig::default(), &[bad]).is_err());
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let mut c = ExperimentConfig::default();
        c.method = "wavelets".into();
        assert_eq!(c.method_spec().unwrap_err().exit_code(), crate::error::EXIT_USAGE);
        c = ExperimentConfig { sigma: 0.0, ..Default::default() };
        assert_eq!(c.method_spec().unwrap_err().exit_code(), crate::error::EXIT_USAGE);
    }
}
