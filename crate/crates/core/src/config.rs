//! TOML run configuration with defaults for every hyperparameter.
//!
//! A single config file drives the whole pipeline; every section and field
//! is optional and falls back to the documented default, so an empty file
//! (or no file at all) reproduces the reference experiment: a 14-machine
//! fleet, machines M1-M5 and M8-M12 for training, M6-M7 and M13-M14 for
//! testing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cascade::SplitStrategy;
use crate::classifiers::ModelSpec;
use crate::datagen::{DegradationProfile, FleetConfig, IntervalCounts};
use crate::metrics::Weights;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: String,
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn default_seed() -> u64 {
    42
}
fn default_wave_length() -> usize {
    1024
}
fn default_n_faulty() -> usize {
    7
}
fn default_n_healthy() -> usize {
    7
}
fn default_waves_normal() -> usize {
    90
}
fn default_waves_risky() -> usize {
    60
}
fn default_waves_high_risk() -> usize {
    55
}
fn default_waves_healthy() -> usize {
    205
}
fn default_duration_days() -> f64 {
    180.0
}
fn default_train_machines() -> Vec<String> {
    ["M1", "M2", "M3", "M4", "M5", "M8", "M9", "M10", "M11", "M12"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}
fn default_test_machines() -> Vec<String> {
    ["M6", "M7", "M13", "M14"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub seed: u64,
    pub wave_length: usize,
    pub n_faulty: usize,
    pub n_healthy: usize,
    pub waves_normal: usize,
    pub waves_risky: usize,
    pub waves_high_risk: usize,
    pub waves_healthy: usize,
    pub duration_days: f64,
    pub train_machines: Vec<String>,
    pub test_machines: Vec<String>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            wave_length: default_wave_length(),
            n_faulty: default_n_faulty(),
            n_healthy: default_n_healthy(),
            waves_normal: default_waves_normal(),
            waves_risky: default_waves_risky(),
            waves_high_risk: default_waves_high_risk(),
            waves_healthy: default_waves_healthy(),
            duration_days: default_duration_days(),
            train_machines: default_train_machines(),
            test_machines: default_test_machines(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesConfig {
    /// Denoise each wave before extraction.
    pub denoise: bool,
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        Self { denoise: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub cv_threshold: f64,
    pub gini_threshold: f64,
    pub forest_trees: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            cv_threshold: 1.0,
            gini_threshold: 0.01,
            forest_trees: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifiersConfig {
    pub knn_k: usize,
    pub forest_trees: usize,
    pub mlp_hidden: usize,
    pub mlp_epochs: usize,
    pub mlp_learning_rate: f64,
    pub cv_folds: usize,
}

impl Default for ClassifiersConfig {
    fn default() -> Self {
        Self {
            knn_k: 5,
            forest_trees: 100,
            mlp_hidden: 32,
            mlp_epochs: 600,
            mlp_learning_rate: 0.3,
            cv_folds: 5,
        }
    }
}

impl ClassifiersConfig {
    /// The model spec for an algorithm name (`knn`, `forest`, `mlp`).
    pub fn spec(&self, algorithm: &str) -> Result<ModelSpec, ConfigError> {
        match algorithm {
            "knn" => Ok(ModelSpec::Knn { k: self.knn_k }),
            "forest" => Ok(ModelSpec::Forest {
                n_trees: self.forest_trees,
            }),
            "mlp" => Ok(ModelSpec::Mlp {
                hidden: self.mlp_hidden,
                epochs: self.mlp_epochs,
                learning_rate: self.mlp_learning_rate,
            }),
            other => Err(ConfigError::Invalid(format!(
                "unknown algorithm {other} (expected knn, forest, or mlp)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CascadeSection {
    /// `by_machine` (the reference experiment) or `stratified`.
    pub split: String,
    pub stratified_fraction: f64,
    /// Algorithms entering the cascade grid and the ternary baseline.
    pub algorithms: Vec<String>,
}

impl Default for CascadeSection {
    fn default() -> Self {
        Self {
            split: "by_machine".into(),
            stratified_fraction: 0.8,
            algorithms: vec!["knn".into(), "forest".into(), "mlp".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Interval score weights (normal, risky, high-risk); must sum to 1.
    pub weights: [f64; 3],
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            weights: [0.2, 0.3, 0.5],
        }
    }
}

/// The full run configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data: DataConfig,
    pub features: FeaturesConfig,
    pub selection: SelectionConfig,
    pub classifiers: ClassifiersConfig,
    pub cascade: CascadeSection,
    pub metrics: MetricsConfig,
}

impl Config {
    /// Load from a TOML file; missing fields take their defaults.
    pub fn load(path: &str) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_string(),
            source,
        })?;
        let config: Config = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_string(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.weights()?;
        if self.cascade.split != "by_machine" && self.cascade.split != "stratified" {
            return Err(ConfigError::Invalid(format!(
                "cascade.split must be by_machine or stratified, got {}",
                self.cascade.split
            )));
        }
        for algorithm in &self.cascade.algorithms {
            self.classifiers.spec(algorithm)?;
        }
        if self.cascade.algorithms.is_empty() {
            return Err(ConfigError::Invalid("cascade.algorithms is empty".into()));
        }
        Ok(())
    }

    pub fn weights(&self) -> Result<Weights, ConfigError> {
        let [w1, w2, w3] = self.metrics.weights;
        Weights::new(w1, w2, w3).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn fleet(&self) -> FleetConfig {
        FleetConfig {
            n_faulty: self.data.n_faulty,
            n_healthy: self.data.n_healthy,
            faulty_counts: IntervalCounts {
                normal: self.data.waves_normal,
                risky: self.data.waves_risky,
                high_risk: self.data.waves_high_risk,
            },
            healthy_waves: self.data.waves_healthy,
            duration_seconds: self.data.duration_days * 86_400.0,
            wave_len: self.data.wave_length,
            profile: DegradationProfile::default(),
            seed: self.data.seed,
        }
    }

    pub fn split_strategy(&self) -> SplitStrategy {
        if self.cascade.split == "stratified" {
            SplitStrategy::Stratified {
                fraction: self.cascade.stratified_fraction,
                seed: self.data.seed,
            }
        } else {
            SplitStrategy::ByMachine {
                train: self.data.train_machines.clone(),
                test: self.data.test_machines.clone(),
            }
        }
    }
}
