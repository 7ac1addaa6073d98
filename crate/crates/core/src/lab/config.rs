//! Experiment configuration files: one `key = value` pair per line, `#`
//! starts a comment. Relative paths are resolved against the file's
//! directory.
//!
//! ```text
//! name          = mlp-mnist
//! dataset       = mnist            # blobs:CLASSES | mnist | cifar10
//! mnist_dir     = ../data/mnist
//! samples       = 10000
//! val_samples   = 2000
//! layers        = flatten dense:256 relu dense:64 relu
//! optimizer     = adam             # sgd | adam
//! learning_rate = 0.001
//! batch_size    = 128
//! epochs        = 8
//! ```
//!
//! Sweeps add `scales = 1, 1/2, 1/4, 1/8` (capacity) or
//! `difficulty = blobs:2 blobs:10 mnist cifar10` (difficulty ladder).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use super::data::{self, BlobConfig, DataError, Dataset};
use super::optim::{LrSchedule, OptimizerKind};
use super::spec::{parse_layers, InputShape, LayerSpec, NetworkSpec, WidthScale};
use super::train::TrainConfig;
use super::LabError;

#[derive(Debug, Error)]
pub enum ConfigError {
    /// The file cannot be read or is not a well-formed configuration.
    #[error("{0}")]
    Malformed(String),
    /// A field is well-formed but its value is out of range.
    #[error("invalid value for {field}: {message}")]
    InvalidValue { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    Blobs { classes: usize },
    Mnist,
    Cifar10,
}

impl std::fmt::Display for DataSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DataSource::Blobs { classes } => write!(f, "blobs:{classes}"),
            DataSource::Mnist => f.write_str("mnist"),
            DataSource::Cifar10 => f.write_str("cifar10"),
        }
    }
}

fn parse_source(token: &str, field: &str) -> Result<DataSource, ConfigError> {
    match token {
        "mnist" => Ok(DataSource::Mnist),
        "cifar10" => Ok(DataSource::Cifar10),
        t => match t.strip_prefix("blobs:").map(str::parse::<usize>) {
            Some(Ok(classes)) if classes >= 2 => Ok(DataSource::Blobs { classes }),
            Some(_) => Err(invalid(field, format!("blobs need at least 2 classes, got {t:?}"))),
            None => Err(ConfigError::Malformed(format!(
                "{field}: unknown dataset {t:?} (expected blobs:N, mnist or cifar10)"
            ))),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub dataset: Option<DataSource>,
    pub mnist_dir: Option<PathBuf>,
    pub cifar10_file: Option<PathBuf>,
    /// Total samples (blobs) or a cap on loaded samples (files).
    pub samples: Option<usize>,
    pub val_samples: Option<usize>,
    /// Input shape of generated blobs.
    pub input: InputShape,
    pub blob_separation: f64,
    pub blob_noise: f64,
    pub blob_intrinsic_dim: Option<usize>,
    pub layers: Vec<LayerSpec>,
    pub width_scale: WidthScale,
    pub train: TrainConfig,
    /// Seed given in the file, if any; the caller decides on fallbacks.
    pub seed: Option<u64>,
    pub dump_samples: usize,
    pub scales: Vec<WidthScale>,
    pub difficulty: Vec<DataSource>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "run".into(),
            dataset: None,
            mnist_dir: None,
            cifar10_file: None,
            samples: None,
            val_samples: None,
            input: InputShape::Flat(16),
            blob_separation: 1.0,
            blob_noise: 1.0,
            blob_intrinsic_dim: None,
            layers: Vec::new(),
            width_scale: WidthScale::ONE,
            train: TrainConfig::default(),
            seed: None,
            dump_samples: 1000,
            scales: Vec::new(),
            difficulty: Vec::new(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "name",
    "dataset",
    "mnist_dir",
    "cifar10_file",
    "samples",
    "val_samples",
    "input",
    "blob_separation",
    "blob_noise",
    "blob_intrinsic_dim",
    "layers",
    "width_scale",
    "optimizer",
    "momentum",
    "learning_rate",
    "lr_decay",
    "batch_size",
    "epochs",
    "seed",
    "augmentation",
    "measure_samples",
    "delta",
    "dump_samples",
    "scales",
    "difficulty",
];

/// Splits the text into key/value pairs, rejecting unknown and repeated keys.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::Malformed(format!("line {}: expected key = value", i + 1)))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::Malformed(format!("line {}: unknown key {key:?}", i + 1)));
        }
        if out.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(ConfigError::Malformed(format!("line {}: {key} given twice", i + 1)));
        }
    }
    Ok(out)
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::Malformed(format!("{key}: cannot parse {value:?} as a number")))
}

impl ExperimentConfig {
    /// Parses a configuration; relative paths are taken relative to `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let pairs = parse_pairs(text)?;
        let mut cfg = ExperimentConfig::default();
        let mut momentum = None;
        let mut optimizer = None;
        for (key, value) in &pairs {
            let v = value.as_str();
            let k = key.as_str();
            let malformed = |e: LabError| ConfigError::Malformed(format!("{k}: {e}"));
            match k {
                "name" => {
                    if v.is_empty() || v.contains(|c: char| c.is_whitespace() || c == '/') {
                        return Err(invalid(k, "must be a non-empty word without slashes"));
                    }
                    cfg.name = v.to_string();
                }
                "dataset" => cfg.dataset = Some(parse_source(v, k)?),
                "mnist_dir" => cfg.mnist_dir = Some(base_dir.join(v)),
                "cifar10_file" => cfg.cifar10_file = Some(base_dir.join(v)),
                "samples" => cfg.samples = Some(number(k, v)?),
                "val_samples" => cfg.val_samples = Some(number(k, v)?),
                "input" => cfg.input = v.parse().map_err(malformed)?,
                "blob_separation" => cfg.blob_separation = number(k, v)?,
                "blob_noise" => cfg.blob_noise = number(k, v)?,
                "blob_intrinsic_dim" => cfg.blob_intrinsic_dim = Some(number(k, v)?),
                "layers" => cfg.layers = parse_layers(v).map_err(malformed)?,
                "width_scale" => cfg.width_scale = v.parse().map_err(|e: LabError| invalid(k, e.to_string()))?,
                "optimizer" => {
                    optimizer = Some(match v {
                        "sgd" => OptimizerKind::sgd(),
                        "adam" => OptimizerKind::adam(),
                        _ => return Err(ConfigError::Malformed(format!("optimizer: expected sgd or adam, got {v:?}"))),
                    })
                }
                "momentum" => momentum = Some(number::<f64>(k, v)?),
                "learning_rate" => cfg.train.learning_rate = number(k, v)?,
                "lr_decay" => cfg.train.lr_decay = parse_decay(v)?,
                "batch_size" => cfg.train.batch_size = number(k, v)?,
                "epochs" => cfg.train.epochs = number(k, v)?,
                "seed" => cfg.seed = Some(number(k, v)?),
                "augmentation" => cfg.train.augmentation = v.parse().map_err(malformed)?,
                "measure_samples" => cfg.train.measure_samples = number(k, v)?,
                "delta" => cfg.train.delta = number(k, v)?,
                "dump_samples" => cfg.dump_samples = number(k, v)?,
                "scales" => {
                    cfg.scales = split_list(v)
                        .map(|s| s.parse().map_err(|e: LabError| invalid(k, e.to_string())))
                        .collect::<Result<_, _>>()?
                }
                "difficulty" => cfg.difficulty = split_list(v).map(|s| parse_source(s, k)).collect::<Result<_, _>>()?,
                _ => unreachable!("keys are checked in parse_pairs"),
            }
        }
        cfg.train.optimizer = match (optimizer.unwrap_or(OptimizerKind::sgd()), momentum) {
            (OptimizerKind::Sgd { .. }, m) => OptimizerKind::Sgd { momentum: m.unwrap_or(0.0) },
            (_, Some(_)) => return Err(invalid("momentum", "only applies to sgd")),
            (adam, None) => adam,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Malformed(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Value checks that name the offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.train;
        if !(t.learning_rate > 0.0 && t.learning_rate.is_finite()) {
            return Err(invalid("learning_rate", format!("must be positive, got {}", t.learning_rate)));
        }
        if t.batch_size == 0 {
            return Err(invalid("batch_size", "must be at least 1"));
        }
        if t.epochs == 0 {
            return Err(invalid("epochs", "must be at least 1"));
        }
        if !(t.delta > 0.0 && t.delta <= 1.0) {
            return Err(invalid("delta", format!("must be in (0, 1], got {}", t.delta)));
        }
        if t.measure_samples < 2 {
            return Err(invalid("measure_samples", "must be at least 2"));
        }
        if let OptimizerKind::Sgd { momentum } = t.optimizer {
            if !(0.0..1.0).contains(&momentum) {
                return Err(invalid("momentum", format!("must be in [0, 1), got {momentum}")));
            }
        }
        if let LrSchedule::Step { every, factor } = t.lr_decay {
            if every == 0 || !(factor > 0.0 && factor <= 1.0) {
                return Err(invalid("lr_decay", "needs every >= 1 and factor in (0, 1]"));
            }
        }
        if !(self.blob_separation >= 0.0 && self.blob_noise >= 0.0) {
            return Err(invalid("blob_separation", "blob parameters must be non-negative"));
        }
        if self.samples == Some(0) {
            return Err(invalid("samples", "must be at least 1"));
        }
        if let (Some(v), Some(s)) = (self.val_samples, self.samples) {
            if v == 0 || v >= s {
                return Err(invalid("val_samples", format!("must be in 1..{s}")));
            }
        }
        Ok(())
    }

    /// Held-out sample count for a dataset of `n` samples (a fifth by default).
    pub fn val_count(&self, n: usize) -> usize {
        self.val_samples.unwrap_or((n / 5).max(1))
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig { seed, ..self.train.clone() }
    }

    pub fn network_spec(&self, data: &Dataset) -> NetworkSpec {
        NetworkSpec::new(data.shape, self.layers.clone(), data.classes).with_scale(self.width_scale)
    }

    /// Loads or generates a dataset and splits off the validation part.
    pub fn load(&self, source: &DataSource, seed: u64) -> Result<(Dataset, Dataset), LabError> {
        let missing = |key: &str| LabError::InvalidConfig(format!("{source} needs {key}"));
        let data = match source {
            DataSource::Blobs { classes } => data::blobs(&BlobConfig {
                classes: *classes,
                samples: self.samples.unwrap_or(2000),
                shape: self.input,
                separation: self.blob_separation,
                noise: self.blob_noise,
                intrinsic_dim: self.blob_intrinsic_dim,
                seed,
            })?,
            DataSource::Mnist => data::load_mnist_dir(self.mnist_dir.as_ref().ok_or_else(|| missing("mnist_dir"))?, self.samples)?,
            DataSource::Cifar10 => data::load_cifar10(self.cifar10_file.as_ref().ok_or_else(|| missing("cifar10_file"))?, self.samples)?,
        };
        let val = self.val_count(data.len());
        if val >= data.len() {
            return Err(DataError::Invalid(format!("{} samples cannot hold out {val}", data.len())).into());
        }
        Ok(data.split(val, seed)?)
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty())
}

/// `none` or `step:EVERY:FACTOR`.
fn parse_decay(v: &str) -> Result<LrSchedule, ConfigError> {
    if v == "none" {
        return Ok(LrSchedule::None);
    }
    let parts: Vec<&str> = v.split(':').collect();
    match parts[..] {
        ["step", every, factor] => Ok(LrSchedule::Step {
            every: number("lr_decay", every)?,
            factor: number("lr_decay", factor)?,
        }),
        _ => Err(ConfigError::Malformed(format!("lr_decay: expected none or step:EVERY:FACTOR, got {v:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "
        # minimal
        name = demo
        dataset = blobs:3      # three classes
        input = 8
        samples = 300
        layers = dense:16 relu
        optimizer = adam
        learning_rate = 0.01
        lr_decay = step:10:0.1
        epochs = 2
        scales = 1, 1/2 1/4
    ";

    #[test]
    fn parses_sample() {
        let cfg = ExperimentConfig::parse(SAMPLE, Path::new("/tmp")).unwrap();
        assert_eq!(cfg.name, "demo");
        assert_eq!(cfg.dataset, Some(DataSource::Blobs { classes: 3 }));
        assert_eq!(cfg.train.optimizer, OptimizerKind::adam());
        assert_eq!(cfg.train.lr_decay, LrSchedule::Step { every: 10, factor: 0.1 });
        assert_eq!(cfg.scales.len(), 3);
        assert_eq!(cfg.seed, None);
        let (tr, va) = cfg.load(cfg.dataset.as_ref().unwrap(), 1).unwrap();
        assert_eq!((tr.len(), va.len()), (240, 60));
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let cfg = ExperimentConfig::parse("mnist_dir = data/mnist", Path::new("/x/y")).unwrap();
        assert_eq!(cfg.mnist_dir.unwrap(), Path::new("/x/y/data/mnist"));
    }

    #[test]
    fn malformed_versus_invalid() {
        let malformed = ["bogus = 1", "epochs", "epochs = many", "dataset = imagenet", "epochs = 1\nepochs = 2"];
        for text in malformed {
            assert!(matches!(ExperimentConfig::parse(text, Path::new(".")), Err(ConfigError::Malformed(_))), "{text}");
        }
        let err = ExperimentConfig::parse("learning_rate = -0.1", Path::new(".")).unwrap_err();
        assert!(matches!(&err, ConfigError::InvalidValue { field, .. } if field == "learning_rate"));
        assert!(err.to_string().contains("learning_rate"));
        assert!(matches!(
            ExperimentConfig::parse("optimizer = adam\nmomentum = 0.9", Path::new(".")),
            Err(ConfigError::InvalidValue { .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("width_scale = 1/3", Path::new(".")),
            Err(ConfigError::InvalidValue { .. })
        ));
    }
}
