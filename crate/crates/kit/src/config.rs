//! Flat `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Keys are unique. Values are taken verbatim after trimming.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlatConfig {
    entries: BTreeMap<String, String>,
}

impl FlatConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(ConfigError::Syntax { line: i + 1 });
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ConfigError::Duplicate { line: i + 1, key: k.to_string() });
            }
        }
        Ok(Self { entries })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.raw(key)
            .map(|v| v.parse().map_err(|_| ConfigError::BadValue { key: key.to_string(), value: v.to_string() }))
            .transpose()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Every setting a run can take from a config file. Unset keys stay `None`
/// so command-line flags and library defaults can fill them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentConfig {
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub cards: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub batch_size: Option<usize>,
    pub epochs_per_phase: Option<usize>,
    pub lr_phase1: Option<f64>,
    pub lr_phase2: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub eps: Option<f64>,
    pub split_fraction: Option<f64>,
    pub output_w: Option<usize>,
    pub output_h: Option<usize>,
    pub blur_sigma_min: Option<f64>,
    pub blur_sigma_max: Option<f64>,
    pub noise_variance_min: Option<f64>,
    pub noise_variance_max: Option<f64>,
    pub copies_per_object: Option<usize>,
    pub w_vision: Option<f64>,
    pub fps: Option<usize>,
    pub window_s: Option<f64>,
}

pub const KEYS: [&str; 23] = [
    "features",
    "labels",
    "cards",
    "output_dir",
    "seed",
    "batch_size",
    "epochs_per_phase",
    "lr_phase1",
    "lr_phase2",
    "beta1",
    "beta2",
    "eps",
    "split_fraction",
    "output_w",
    "output_h",
    "blur_sigma_min",
    "blur_sigma_max",
    "noise_variance_min",
    "noise_variance_max",
    "copies_per_object",
    "w_vision",
    "fps",
    "window_s",
];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_flat(&FlatConfig::parse(text)?)
    }

    pub fn from_flat(c: &FlatConfig) -> Result<Self, ConfigError> {
        if let Some(k) = c.keys().find(|k| !KEYS.contains(k)) {
            return Err(ConfigError::UnknownKey(k.to_string()));
        }
        Ok(Self {
            features: c.get("features")?,
            labels: c.get("labels")?,
            cards: c.get("cards")?,
            output_dir: c.get("output_dir")?,
            seed: c.get("seed")?,
            batch_size: c.get("batch_size")?,
            epochs_per_phase: c.get("epochs_per_phase")?,
            lr_phase1: c.get("lr_phase1")?,
            lr_phase2: c.get("lr_phase2")?,
            beta1: c.get("beta1")?,
            beta2: c.get("beta2")?,
            eps: c.get("eps")?,
            split_fraction: c.get("split_fraction")?,
            output_w: c.get("output_w")?,
            output_h: c.get("output_h")?,
            blur_sigma_min: c.get("blur_sigma_min")?,
            blur_sigma_max: c.get("blur_sigma_max")?,
            noise_variance_min: c.get("noise_variance_min")?,
            noise_variance_max: c.get("noise_variance_max")?,
            copies_per_object: c.get("copies_per_object")?,
            w_vision: c.get("w_vision")?,
            fps: c.get("fps")?,
            window_s: c.get("window_s")?,
        })
    }
}
