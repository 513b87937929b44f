//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; blank lines and lines starting with `#` are
//! ignored. Unknown keys are rejected. A `preset` key, wherever it appears,
//! is applied before every other key.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};
use socgcf::graph::SplitMode;
use socgcf::model::{ModelConfig, RbfConfig};
use socgcf::training::{AdamConfig, LossConfig, TrainConfig};
use socgcf::Parallelism;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub dataset: String,
    pub interactions: Option<PathBuf>,
    pub social: Option<PathBuf>,
    pub interactions_sha256: Option<String>,
    pub social_sha256: Option<String>,
    pub split_train: f64,
    pub split_val: f64,
    pub split_test: f64,
    pub split_seed: u64,
    pub split_per_user: bool,
    pub dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub ssl_weight: f64,
    pub l2_weight: f64,
    pub temperature: f64,
    pub mask_ratio: f64,
    pub sigma: f64,
    pub leaky_slope: f64,
    pub theta: f64,
    pub resolution: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub no_sia: bool,
    pub sum_fusion: bool,
    pub no_ssl: bool,
    pub baseline_lightgcn: bool,
    pub cache_sia: bool,
    pub ks: Vec<usize>,
    pub coldstart_count: usize,
    pub noise_ratios: Vec<f64>,
    pub noise_zero_shot: bool,
    /// Not part of the hash: output location and thread policy do not
    /// change results.
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub parallel: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: "custom".into(),
            interactions: None,
            social: None,
            interactions_sha256: None,
            social_sha256: None,
            split_train: 0.6,
            split_val: 0.2,
            split_test: 0.2,
            split_seed: 2024,
            split_per_user: false,
            dim: 64,
            hidden: 64,
            layers: 3,
            ssl_weight: 0.3,
            l2_weight: 1e-6,
            temperature: 0.2,
            mask_ratio: 0.1,
            sigma: 1.0,
            leaky_slope: 0.01,
            theta: 1.5,
            resolution: 1.0,
            lr: 1e-3,
            batch_size: 4096,
            max_epochs: 500,
            patience: 15,
            seed: 2024,
            no_sia: false,
            sum_fusion: false,
            no_ssl: false,
            baseline_lightgcn: false,
            cache_sia: false,
            ks: vec![10, 20, 40],
            coldstart_count: 500,
            noise_ratios: vec![0.0, 0.05, 0.1, 0.2],
            noise_zero_shot: false,
            out: PathBuf::from("out"),
            parallel: false,
        }
    }
}

pub const PRESETS: [&str; 3] = ["douban-book", "yelp", "epinions"];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Usage(format!("invalid boolean {value:?} for {key}"))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn optional(value: &str) -> Option<String> {
    (!value.is_empty()).then(|| value.to_string())
}

impl RunConfig {
    /// Defaults for one of the benchmark datasets.
    pub fn preset(name: &str) -> Result<Self, CliError> {
        let (ssl_weight, temperature) = match name {
            "douban-book" => (0.3, 0.2),
            "yelp" => (0.2, 0.4),
            "epinions" => (0.3, 0.3),
            _ => {
                return Err(CliError::Usage(format!(
                    "unknown preset {name:?} (expected one of {})",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(RunConfig {
            dataset: name.into(),
            ssl_weight,
            temperature,
            ..RunConfig::default()
        })
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        match key {
            "dataset" => self.dataset = v.into(),
            "interactions" => self.interactions = optional(v).map(PathBuf::from),
            "social" => self.social = optional(v).map(PathBuf::from),
            "interactions_sha256" => self.interactions_sha256 = optional(v),
            "social_sha256" => self.social_sha256 = optional(v),
            "split_train" => self.split_train = parse(key, v)?,
            "split_val" => self.split_val = parse(key, v)?,
            "split_test" => self.split_test = parse(key, v)?,
            "split_seed" => self.split_seed = parse(key, v)?,
            "split_per_user" => self.split_per_user = parse_bool(key, v)?,
            "dim" => self.dim = parse(key, v)?,
            "hidden" => self.hidden = parse(key, v)?,
            "layers" => self.layers = parse(key, v)?,
            "ssl_weight" => self.ssl_weight = parse(key, v)?,
            "l2_weight" => self.l2_weight = parse(key, v)?,
            "temperature" => self.temperature = parse(key, v)?,
            "mask_ratio" => self.mask_ratio = parse(key, v)?,
            "sigma" => self.sigma = parse(key, v)?,
            "leaky_slope" => self.leaky_slope = parse(key, v)?,
            "theta" => self.theta = parse(key, v)?,
            "resolution" => self.resolution = parse(key, v)?,
            "lr" => self.lr = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "max_epochs" => self.max_epochs = parse(key, v)?,
            "patience" => self.patience = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "no_sia" => self.no_sia = parse_bool(key, v)?,
            "sum_fusion" => self.sum_fusion = parse_bool(key, v)?,
            "no_ssl" => self.no_ssl = parse_bool(key, v)?,
            "baseline_lightgcn" => self.baseline_lightgcn = parse_bool(key, v)?,
            "cache_sia" => self.cache_sia = parse_bool(key, v)?,
            "ks" => self.ks = parse_list(key, v)?,
            "coldstart_count" => self.coldstart_count = parse(key, v)?,
            "noise_ratios" => self.noise_ratios = parse_list(key, v)?,
            "noise_zero_shot" => self.noise_zero_shot = parse_bool(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "parallel" => self.parallel = parse_bool(key, v)?,
            _ => return Err(CliError::Usage(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Parses configuration text; relative dataset paths resolve against
    /// `base`.
    pub fn parse_text(text: &str, base: Option<&Path>) -> Result<Self, CliError> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
            entries.push((key.trim().to_string(), value.trim().to_string()));
        }
        let mut cfg = match entries.iter().find(|(k, _)| k == "preset") {
            Some((_, name)) => RunConfig::preset(name)?,
            None => RunConfig::default(),
        };
        for (k, v) in entries.iter().filter(|(k, _)| k != "preset") {
            cfg.set(k, v)?;
        }
        if let Some(base) = base {
            for p in [&mut cfg.interactions, &mut cfg.social].into_iter().flatten() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
        RunConfig::parse_text(&text, path.parent())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        if self.ks.is_empty() || self.ks.contains(&0) {
            return bad("ks must be a non-empty list of positive cutoffs".into());
        }
        if !self.ks.contains(&20) {
            return bad("ks must include 20 (used for validation)".into());
        }
        if !(self.theta > 0.0) {
            return bad(format!("theta {} must be positive", self.theta));
        }
        if !(self.resolution > 0.0) {
            return bad(format!("resolution {} must be positive", self.resolution));
        }
        if self.noise_ratios.iter().any(|r| !(0.0..1.0).contains(r)) {
            return bad("noise ratios must lie in [0, 1)".into());
        }
        self.train_config().validate().map_err(|e| CliError::Usage(e.to_string()))
    }

    /// Canonical `key = value` listing of every result-affecting field.
    pub fn canonical(&self) -> String {
        let value = serde_json::to_value(self).expect("config serialises");
        let mut out = String::new();
        if let serde_json::Value::Object(map) = value {
            let mut keys: Vec<_> = map.keys().cloned().collect();
            keys.sort();
            for k in keys {
                let _ = writeln!(out, "{k} = {}", map[&k]);
            }
        }
        out
    }

    pub fn hash(&self) -> [u8; 32] {
        Sha256::digest(self.canonical().as_bytes()).into()
    }

    pub fn hash_hex(&self) -> String {
        hex::encode(self.hash())
    }

    pub fn parallelism(&self) -> Parallelism {
        if self.parallel {
            Parallelism::available()
        } else {
            Parallelism::Sequential
        }
    }

    pub fn split_mode(&self) -> SplitMode {
        if self.split_per_user {
            SplitMode::PerUser
        } else {
            SplitMode::Global
        }
    }

    pub fn model_config(&self) -> ModelConfig {
        let baseline = self.baseline_lightgcn;
        ModelConfig {
            dim: self.dim,
            hidden: if baseline { 0 } else { self.hidden },
            layers: self.layers,
            rbf: RbfConfig { sigma: self.sigma },
            leaky_slope: self.leaky_slope,
            no_sia: self.no_sia || baseline,
            sum_fusion: self.sum_fusion,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            model: self.model_config(),
            loss: LossConfig {
                ssl_weight: self.ssl_weight,
                l2_weight: self.l2_weight,
                temperature: self.temperature,
                mask_ratio: self.mask_ratio,
                no_ssl: self.no_ssl || self.baseline_lightgcn,
            },
            adam: AdamConfig {
                lr: self.lr,
                ..AdamConfig::default()
            },
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed: self.seed,
            cache_sia: self.cache_sia,
            parallelism: self.parallelism(),
        }
    }

    /// The same run as the per-user embedding baseline.
    pub fn as_baseline(&self) -> Self {
        RunConfig {
            baseline_lightgcn: true,
            ..self.clone()
        }
    }
}
