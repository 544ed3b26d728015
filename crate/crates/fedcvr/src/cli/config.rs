//! Declarative run configuration: a flat TOML document in which every key is
//! optional and defaults to the benchmark setting, with unknown keys
//! rejected. The resolved form is echoed into every emitted artifact.

use crate::data::GeneratorConfig;
use crate::engine::{PartitionMode, TrainingConfig};
use crate::privacy::PrivacyConfig;
use crate::strategies::{StrategyConfig, StrategyKind};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Raw config file: flat key/value pairs, all optional, unknown keys are
/// errors.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    // synthetic cohort
    pub cohort_n: Option<usize>,
    pub age_min: Option<f64>,
    pub age_max: Option<f64>,
    pub sbp_mean: Option<f64>,
    pub sbp_sd: Option<f64>,
    pub dbp_mean: Option<f64>,
    pub dbp_sd: Option<f64>,
    pub chol_mean: Option<f64>,
    pub chol_sd: Option<f64>,
    pub smoker_rate: Option<f64>,
    pub diabetic_rate: Option<f64>,
    pub holdout_fraction: Option<f64>,
    // federated training
    pub num_clients: Option<usize>,
    pub rounds: Option<u64>,
    pub local_epochs: Option<u64>,
    pub client_lr: Option<f64>,
    pub batch_size: Option<usize>,
    pub participation: Option<f64>,
    pub seed: Option<u64>,
    pub partition_mode: Option<String>,
    // differential privacy
    pub dp_enabled: Option<bool>,
    pub clip_norm: Option<f64>,
    pub noise_multiplier: Option<f64>,
    pub delta: Option<f64>,
    // server strategy
    pub strategy: Option<String>,
    pub server_lr: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub tau: Option<f64>,
    pub prox_mu: Option<f64>,
    pub n_clusters: Option<usize>,
}

impl RunConfigFile {
    pub fn from_path(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }
}

/// Fully-resolved configuration with every default applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub generator: GeneratorConfig,
    pub holdout_fraction: f64,
    pub training: TrainingConfig,
    pub privacy: PrivacyConfig,
    pub strategy: StrategyConfig,
    pub strategy_kind: StrategyKind,
}

impl Default for ResolvedConfig {
    fn default() -> Self {
        ResolvedConfig {
            generator: GeneratorConfig::default(),
            holdout_fraction: 0.2,
            training: TrainingConfig::default(),
            privacy: PrivacyConfig::default(),
            strategy: StrategyConfig::default(),
            strategy_kind: StrategyKind::FedCvr,
        }
    }
}

impl ResolvedConfig {
    /// Apply the file on top of the defaults.
    pub fn resolve(file: &RunConfigFile) -> Result<Self, String> {
        let mut cfg = ResolvedConfig::default();
        let g = &mut cfg.generator;
        if let Some(n) = file.cohort_n {
            g.n = n;
        }
        if let Some(v) = file.age_min {
            g.age.0 = v;
        }
        if let Some(v) = file.age_max {
            g.age.1 = v;
        }
        if let Some(v) = file.sbp_mean {
            g.systolic_bp.0 = v;
        }
        if let Some(v) = file.sbp_sd {
            g.systolic_bp.1 = v;
        }
        if let Some(v) = file.dbp_mean {
            g.diastolic_bp.0 = v;
        }
        if let Some(v) = file.dbp_sd {
            g.diastolic_bp.1 = v;
        }
        if let Some(v) = file.chol_mean {
            g.cholesterol.0 = v;
        }
        if let Some(v) = file.chol_sd {
            g.cholesterol.1 = v;
        }
        if let Some(v) = file.smoker_rate {
            g.smoker_rate = v;
        }
        if let Some(v) = file.diabetic_rate {
            g.diabetic_rate = v;
        }
        if let Some(v) = file.holdout_fraction {
            if !(0.0..1.0).contains(&v) {
                return Err("holdout_fraction must lie in [0, 1)".into());
            }
            cfg.holdout_fraction = v;
        }

        let t = &mut cfg.training;
        if let Some(v) = file.num_clients {
            t.num_clients = v;
        }
        if let Some(v) = file.rounds {
            t.rounds = v;
        }
        if let Some(v) = file.local_epochs {
            t.local_epochs = v;
        }
        if let Some(v) = file.client_lr {
            t.client_lr = v;
        }
        if let Some(v) = file.batch_size {
            t.batch_size = v;
        }
        if let Some(v) = file.participation {
            t.participation = v;
        }
        if let Some(v) = file.seed {
            t.seed = v;
        }
        if let Some(mode) = &file.partition_mode {
            t.partition_mode = match mode.as_str() {
                "iid" => PartitionMode::Iid,
                "noniid" => PartitionMode::NonIid,
                other => return Err(format!("partition_mode must be iid or noniid, got {other}")),
            };
        }

        let p = &mut cfg.privacy;
        if let Some(v) = file.dp_enabled {
            p.enabled = v;
        }
        if let Some(v) = file.clip_norm {
            p.clip_norm = v;
        }
        if let Some(v) = file.noise_multiplier {
            p.noise_multiplier = v;
        }
        if let Some(v) = file.delta {
            p.delta = v;
        }

        let s = &mut cfg.strategy;
        if let Some(v) = file.server_lr {
            s.server_lr = v;
        }
        if let Some(v) = file.beta1 {
            s.beta1 = v;
        }
        if let Some(v) = file.beta2 {
            s.beta2 = v;
        }
        if let Some(v) = file.tau {
            s.tau = v;
        }
        if let Some(v) = file.prox_mu {
            s.prox_mu = v;
        }
        if let Some(v) = file.n_clusters {
            s.n_clusters = v;
        }
        if let Some(name) = &file.strategy {
            cfg.strategy_kind = name.parse().map_err(|e| format!("{e}"))?;
        }
        // the strategy layer needs the client step size to relate deltas and
        // pseudo-gradients
        cfg.strategy.client_lr = cfg.training.client_lr;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        match path {
            Some(p) => Self::resolve(&RunConfigFile::from_path(p)?),
            None => Ok(ResolvedConfig::default()),
        }
    }
}
