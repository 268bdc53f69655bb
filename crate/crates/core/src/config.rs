//! Experiment configuration file: one TOML table per module, unknown keys
//! rejected.
//!
//! ```toml
//! [engine]
//! k = 1
//! policy = "db-mlp"
//! seed = 7
//!
//! [compare]
//! seeds = [1, 2, 3]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clustering::DbscanSettings;
use crate::dataio::SyntheticEnvSpec;
use crate::engine::EngineConfig;
use crate::models::UpdateSchedule;
use crate::policies::{PolicyConfig, PolicyId};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub engine: EngineSection,
    #[serde(default)]
    pub models: ModelsSection,
    #[serde(default)]
    pub schedule: UpdateSchedule,
    #[serde(default)]
    pub clustering: DbscanSettings,
    #[serde(default)]
    pub policies: PolicyConfig,
    #[serde(default)]
    pub compare: CompareSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub synthetic: Option<SyntheticEnvSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    pub k: usize,
    pub policy: PolicyId,
    pub seed: u64,
    /// Defaults to on only for `dbscan-db-mlp`.
    #[serde(default)]
    pub clustering: Option<bool>,
    #[serde(default = "default_warmup")]
    pub warmup_trials: usize,
    #[serde(default = "default_eval_fraction")]
    pub eval_fraction: f64,
    #[serde(default = "default_series_window")]
    pub series_window: usize,
}

fn default_warmup() -> usize {
    5000
}
fn default_eval_fraction() -> f64 {
    0.3
}
fn default_series_window() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelsSection {
    #[serde(default = "default_hidden")]
    pub hidden_layers: Vec<usize>,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
}

fn default_hidden() -> Vec<usize> {
    vec![64, 32]
}
fn default_lr() -> f64 {
    0.1
}

impl Default for ModelsSection {
    fn default() -> Self {
        Self {
            hidden_layers: default_hidden(),
            learning_rate: default_lr(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyId>,
    /// Slate sizes; `[engine.k]` when empty.
    #[serde(default)]
    pub k_values: Vec<usize>,
    /// Seeds; `[engine.seed]` when empty.
    #[serde(default)]
    pub seeds: Vec<u64>,
}

fn default_policies() -> Vec<PolicyId> {
    PolicyId::COMPARISON.to_vec()
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            policies: default_policies(),
            k_values: Vec::new(),
            seeds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Interaction CSV; `--data` overrides it.
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Replay in a seeded shuffled order instead of by timestamp.
    #[serde(default)]
    pub shuffle_seed: Option<u64>,
    /// Trials to generate from `[synthetic]` when no CSV is given.
    #[serde(default)]
    pub n_trials: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| Error::config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    pub fn validate(&self) -> Result<()> {
        self.engine_config().validate()?;
        if let Some(spec) = &self.synthetic {
            spec.validate()?;
        }
        if self.compare.k_values.contains(&0) {
            return Err(Error::config("compare.k_values entries must be at least 1"));
        }
        Ok(())
    }

    pub fn engine_config(&self) -> EngineConfig {
        let e = &self.engine;
        EngineConfig {
            k: e.k,
            policy: e.policy,
            policy_config: self.policies,
            clustering_enabled: e.clustering.unwrap_or(e.policy.forces_clustering()),
            dbscan: self.clustering,
            schedule: self.schedule,
            hidden_layers: self.models.hidden_layers.clone(),
            learning_rate: self.models.learning_rate,
            warmup_trials: e.warmup_trials,
            eval_fraction: e.eval_fraction,
            series_window: e.series_window,
            seed: e.seed,
        }
    }

    /// Engine config for one comparison cell. The clustering flag follows
    /// the policy unless the file sets it explicitly.
    pub fn cell_config(&self, policy: PolicyId, k: usize, seed: u64) -> EngineConfig {
        let mut c = self.engine_config();
        c.policy = policy;
        c.k = k;
        c.seed = seed;
        c.clustering_enabled =
            policy.forces_clustering() || self.engine.clustering.unwrap_or(false);
        c
    }

    pub fn compare_k_values(&self) -> Vec<usize> {
        if self.compare.k_values.is_empty() {
            vec![self.engine.k]
        } else {
            self.compare.k_values.clone()
        }
    }

    pub fn compare_seeds(&self) -> Vec<u64> {
        if self.compare.seeds.is_empty() {
            vec![self.engine.seed]
        } else {
            self.compare.seeds.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[engine]\nk = 3\npolicy = \"db-lr\"\nseed = 11\n";

    #[test]
    fn minimal_file_gets_defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let e = c.engine_config();
        assert_eq!((e.k, e.policy, e.seed), (3, PolicyId::DbLr, 11));
        assert_eq!(e.schedule, UpdateSchedule::default());
        assert_eq!(e.policy_config, PolicyConfig::default());
        assert!(!e.clustering_enabled);
        assert_eq!(c.compare.policies.len(), 9);
    }

    #[test]
    fn missing_required_key_is_named() {
        let err = ExperimentConfig::from_toml("[engine]\nk = 1\nseed = 2\n").unwrap_err();
        assert!(err.to_string().contains("policy"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\n[policies]\nepsilion = 0.3\n");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("epsilion"), "{err}");
        assert!(ExperimentConfig::from_toml(&format!("{MINIMAL}\n[extra]\n")).is_err());
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let text = format!("{MINIMAL}\n[policies]\nepsilon = 1.5\n");
        assert_eq!(
            ExperimentConfig::from_toml(&text).unwrap_err().kind(),
            crate::ErrorKind::Config
        );
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        c.compare.seeds = vec![1, 2];
        c.clustering.eps = Some(0.4);
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn dbscan_policy_forces_clustering_in_cells() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert!(
            c.cell_config(PolicyId::DbscanDbMlp, 1, 1)
                .clustering_enabled
        );
        assert!(!c.cell_config(PolicyId::DbMlp, 1, 1).clustering_enabled);
    }
}
