use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use crate::dataio::{ColorTag, Fraction};
use crate::ensemble::{DiversityKind, DEFAULT_ENERGY_THRESHOLD};
use crate::saab::{ArchPreset, DEFAULT_PATCH_CAP};
use crate::ssl::UnlabeledMode;
use crate::{FfError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DatasetKind {
    Mnist,
    Svhn,
    Cifar10,
}

impl DatasetKind {
    pub fn color(self) -> ColorTag {
        match self {
            DatasetKind::Mnist => ColorTag::Gray,
            _ => ColorTag::Rgb,
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::Mnist => "mnist",
            DatasetKind::Svhn => "svhn",
            DatasetKind::Cifar10 => "cifar10",
        })
    }
}

impl FromStr for DatasetKind {
    type Err = FfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "").as_str() {
            "mnist" => Ok(DatasetKind::Mnist),
            "svhn" => Ok(DatasetKind::Svhn),
            "cifar10" | "cifar" => Ok(DatasetKind::Cifar10),
            _ => Err(FfError::config(format!("unknown dataset `{s}`"))),
        }
    }
}

/// On-disk encoding of the dataset files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DataFormat {
    /// `images,labels` IDX pair per split.
    Idx,
    /// CIFAR-10 binary batches.
    Cifar,
    /// One `FFC1` container per split.
    Raw,
}

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataFormat::Idx => "idx",
            DataFormat::Cifar => "cifar",
            DataFormat::Raw => "raw",
        })
    }
}

impl FromStr for DataFormat {
    type Err = FfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "idx" => Ok(DataFormat::Idx),
            "cifar" => Ok(DataFormat::Cifar),
            "raw" => Ok(DataFormat::Raw),
            _ => Err(FfError::config(format!("unknown data format `{s}`"))),
        }
    }
}

/// Every knob of one experiment. Serialized as flat `key = value` lines.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    pub format: DataFormat,
    pub train: Vec<PathBuf>,
    pub test: Vec<PathBuf>,
    pub fraction: Fraction,
    pub seed: u64,
    pub alpha: f64,
    pub keep_fraction: f64,
    pub arch: ArchPreset,
    pub cpca_dim: usize,
    pub stage_widths: Vec<usize>,
    pub unlabeled_mode: UnlabeledMode,
    /// Empty for a single network.
    pub ensemble_types: Vec<DiversityKind>,
    pub svm_c: f64,
    /// `None` derives gamma from the fused features.
    pub svm_gamma: Option<f64>,
    pub energy_threshold: f64,
    pub patch_cap: usize,
    pub ridge_scale: f64,
    /// Parallel width for sweep entries and ensemble members.
    pub jobs: usize,
    /// CSV destination.
    pub output: PathBuf,
    /// Where trained models are saved; `None` skips saving.
    pub model_dir: Option<PathBuf>,
}

pub const CONFIG_KEYS: [&str; 21] = [
    "dataset",
    "format",
    "train",
    "test",
    "fraction",
    "seed",
    "alpha",
    "keep_fraction",
    "arch",
    "cpca_dim",
    "stage_widths",
    "unlabeled_mode",
    "ensemble_types",
    "svm_c",
    "svm_gamma",
    "energy_threshold",
    "patch_cap",
    "ridge_scale",
    "jobs",
    "output",
    "model_dir",
];

fn paths(list: &[&str]) -> Vec<PathBuf> {
    list.iter().map(PathBuf::from).collect()
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| FfError::config(format!("{key}: cannot parse `{value}`")))
}

impl ExperimentConfig {
    /// Protocol defaults for `dataset`.
    pub fn defaults(dataset: DatasetKind) -> Self {
        let (format, train, test, keep, cpca, widths) = match dataset {
            DatasetKind::Mnist => (
                DataFormat::Idx,
                paths(&["data/mnist/train-images-idx3-ubyte", "data/mnist/train-labels-idx1-ubyte"]),
                paths(&["data/mnist/t10k-images-idx3-ubyte", "data/mnist/t10k-labels-idx1-ubyte"]),
                0.7,
                20,
                vec![120, 84, 10],
            ),
            DatasetKind::Svhn => (
                DataFormat::Raw,
                paths(&["data/svhn/train.ffc"]),
                paths(&["data/svhn/test.ffc"]),
                0.7,
                15,
                vec![200, 100, 10],
            ),
            DatasetKind::Cifar10 => (
                DataFormat::Cifar,
                (1..=5)
                    .map(|i| PathBuf::from(format!("data/cifar-10-batches-bin/data_batch_{i}.bin")))
                    .collect(),
                paths(&["data/cifar-10-batches-bin/test_batch.bin"]),
                0.8,
                12,
                vec![200, 100, 10],
            ),
        };
        ExperimentConfig {
            dataset,
            format,
            train,
            test,
            fraction: Fraction::inverse_power_of_two(8),
            seed: 0,
            alpha: 50.0,
            keep_fraction: keep,
            arch: ArchPreset::Ff1,
            cpca_dim: cpca,
            stage_widths: widths,
            unlabeled_mode: UnlabeledMode::Selected,
            ensemble_types: Vec::new(),
            svm_c: 5.0,
            svm_gamma: None,
            energy_threshold: DEFAULT_ENERGY_THRESHOLD,
            patch_cap: DEFAULT_PATCH_CAP,
            ridge_scale: 1e-4,
            jobs: 1,
            output: PathBuf::from("metrics.csv"),
            model_dir: None,
        }
    }

    /// Applies one `key = value` assignment. Setting `dataset` resets every
    /// other key to that dataset's defaults.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "dataset" => *self = ExperimentConfig::defaults(v.parse()?),
            "format" => self.format = v.parse()?,
            "train" => self.train = split_list(v).map(PathBuf::from).collect(),
            "test" => self.test = split_list(v).map(PathBuf::from).collect(),
            "fraction" => self.fraction = v.parse()?,
            "seed" => self.seed = parse_num(key, v)?,
            "alpha" => self.alpha = parse_num(key, v)?,
            "keep_fraction" => self.keep_fraction = parse_num(key, v)?,
            "arch" => self.arch = v.parse()?,
            "cpca_dim" => self.cpca_dim = parse_num(key, v)?,
            "stage_widths" => {
                self.stage_widths = split_list(v).map(|w| parse_num(key, w)).collect::<Result<_>>()?
            }
            "unlabeled_mode" => self.unlabeled_mode = v.parse()?,
            "ensemble_types" => {
                self.ensemble_types = if v == "none" {
                    Vec::new()
                } else {
                    split_list(v).map(str::parse).collect::<Result<_>>()?
                }
            }
            "svm_c" => self.svm_c = parse_num(key, v)?,
            "svm_gamma" => {
                self.svm_gamma = if v == "auto" { None } else { Some(parse_num(key, v)?) }
            }
            "energy_threshold" => self.energy_threshold = parse_num(key, v)?,
            "patch_cap" => self.patch_cap = parse_num(key, v)?,
            "ridge_scale" => self.ridge_scale = parse_num(key, v)?,
            "jobs" => self.jobs = parse_num(key, v)?,
            "output" => self.output = PathBuf::from(v),
            "model_dir" => self.model_dir = (!v.is_empty() && v != "none").then(|| PathBuf::from(v)),
            other => return Err(FfError::config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let path_list = |p: &[PathBuf]| {
            p.iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        Some(match key {
            "dataset" => self.dataset.to_string(),
            "format" => self.format.to_string(),
            "train" => path_list(&self.train),
            "test" => path_list(&self.test),
            "fraction" => self.fraction.to_string(),
            "seed" => self.seed.to_string(),
            "alpha" => self.alpha.to_string(),
            "keep_fraction" => self.keep_fraction.to_string(),
            "arch" => self.arch.to_string(),
            "cpca_dim" => self.cpca_dim.to_string(),
            "stage_widths" => join(&self.stage_widths),
            "unlabeled_mode" => self.unlabeled_mode.to_string(),
            "ensemble_types" if self.ensemble_types.is_empty() => "none".into(),
            "ensemble_types" => join(&self.ensemble_types),
            "svm_c" => self.svm_c.to_string(),
            "svm_gamma" => self.svm_gamma.map_or("auto".into(), |g| g.to_string()),
            "energy_threshold" => self.energy_threshold.to_string(),
            "patch_cap" => self.patch_cap.to_string(),
            "ridge_scale" => self.ridge_scale.to_string(),
            "jobs" => self.jobs.to_string(),
            "output" => self.output.display().to_string(),
            "model_dir" => self
                .model_dir
                .as_ref()
                .map_or("none".into(), |p| p.display().to_string()),
            _ => return None,
        })
    }

    /// Parses `key = value` lines (`#` starts a comment).
    pub fn parse(text: &str) -> Result<Self> {
        ExperimentConfig::from_pairs(&parse_pairs(text)?)
    }

    /// Builds a config from assignments applied in order, except that the
    /// last `dataset` assignment is applied first to pick the defaults.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let dataset = pairs
            .iter()
            .filter(|(k, _)| k == "dataset")
            .last()
            .map(|(_, v)| v.parse())
            .transpose()?
            .unwrap_or(DatasetKind::Mnist);
        let mut cfg = ExperimentConfig::defaults(dataset);
        for (k, v) in pairs.iter().filter(|(k, _)| k != "dataset") {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every key with its current value, one `key = value` per line.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).unwrap_or_default());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.fraction;
        if !(f.num == 1 && f.den.is_power_of_two() && f.den <= 512) {
            return Err(FfError::config(format!("fraction {f} is not 1/2^k with k <= 9")));
        }
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(FfError::config(format!("keep_fraction {} outside (0, 1]", self.keep_fraction)));
        }
        if self.stage_widths.last() != Some(&10) {
            return Err(FfError::config("stage_widths must end at the 10 classes"));
        }
        if self.stage_widths.windows(2).any(|w| w[1] >= w[0]) {
            return Err(FfError::config("stage_widths must strictly decrease"));
        }
        if !(self.alpha > 0.0) || !(self.svm_c > 0.0) || self.svm_gamma.is_some_and(|g| !(g > 0.0)) {
            return Err(FfError::config("alpha, svm_c and svm_gamma must be positive"));
        }
        if !(self.energy_threshold > 0.0 && self.energy_threshold <= 1.0) {
            return Err(FfError::config("energy_threshold outside (0, 1]"));
        }
        if self.cpca_dim == 0 || self.jobs == 0 {
            return Err(FfError::config("cpca_dim and jobs must be positive"));
        }
        let expected_files = |n: usize| match self.format {
            DataFormat::Idx => n == 2,
            DataFormat::Raw => n == 1,
            DataFormat::Cifar => n >= 1,
        };
        if !expected_files(self.train.len()) || !expected_files(self.test.len()) {
            return Err(FfError::config(format!(
                "format {} needs {} per split",
                self.format,
                match self.format {
                    DataFormat::Idx => "an images,labels pair",
                    DataFormat::Raw => "one container",
                    DataFormat::Cifar => "at least one batch file",
                }
            )));
        }
        Ok(())
    }
}

/// Splits config text into trimmed `(key, value)` pairs.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| FfError::config(format!("line {}: expected key = value", no + 1)))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}
