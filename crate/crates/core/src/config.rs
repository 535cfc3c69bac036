//! Run configuration: a TOML file with optional sections, every field
//! defaulting to the built-in profiles, plus programmatic overrides for
//! command-line flags.

use std::path::PathBuf;

use serde::Deserialize;
use thiserror::Error;

use crate::agents::{AgentProfile, SubmitPolicy};
use crate::data::SynthKind;
use crate::incentive::TrainerConfig;
use crate::models::ModelKind;
use crate::simulation::{
    DatasetSpec, SimulationConfig, TextFeaturizer, DEFAULT_HORIZON, DEFAULT_METRICS_INTERVAL,
};

pub const DEFAULT_SYNTH_N: usize = 2_000;
pub const DEFAULT_SYNTH_DIM: usize = 9;
pub const DEFAULT_VOCAB_SIZE: usize = 1_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown model {0:?} (expected perceptron, naive-bayes, or nearest-centroid)")]
    UnknownModel(String),
    #[error("unknown synthetic dataset kind {0:?}")]
    UnknownSynthKind(String),
    #[error("unknown featurizer {0:?} (expected bigram-tf or word-presence)")]
    UnknownFeaturizer(String),
    #[error("unknown submit policy {0:?} (expected accuracy-dependent, always, or never)")]
    UnknownSubmitPolicy(String),
    #[error("dataset section names both a csv path and a synthetic kind")]
    AmbiguousDataset,
}

/// Parse a model name plus sparsity flag into a concrete kind.
pub fn parse_model_kind(name: &str, sparse: bool) -> Result<ModelKind, ConfigError> {
    Ok(match name {
        "perceptron" => ModelKind::Perceptron,
        "naive-bayes" | "naivebayes" => ModelKind::NaiveBayes,
        "nearest-centroid" | "nearestcentroid" => {
            if sparse {
                ModelKind::NearestCentroidSparse
            } else {
                ModelKind::NearestCentroidDense
            }
        }
        "nearest-centroid-dense" => ModelKind::NearestCentroidDense,
        "nearest-centroid-sparse" => ModelKind::NearestCentroidSparse,
        other => return Err(ConfigError::UnknownModel(other.to_string())),
    })
}

fn parse_submit_policy(name: &str) -> Result<SubmitPolicy, ConfigError> {
    Ok(match name {
        "accuracy-dependent" => SubmitPolicy::AccuracyDependent,
        "always" => SubmitPolicy::Always,
        "never" => SubmitPolicy::Never,
        other => return Err(ConfigError::UnknownSubmitPolicy(other.to_string())),
    })
}

fn parse_featurizer(name: &str) -> Result<TextFeaturizer, ConfigError> {
    Ok(match name {
        "bigram-tf" => TextFeaturizer::BigramTf,
        "word-presence" => TextFeaturizer::WordPresence,
        other => return Err(ConfigError::UnknownFeaturizer(other.to_string())),
    })
}

/// The on-disk layout. Every field is optional; omitted values fall back to
/// the built-in defaults documented in the README.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<String>,
    pub sparse: Option<bool>,
    pub seed: Option<u64>,
    pub metrics_interval: Option<u64>,
    pub horizon: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub trainer: TrainerSection,
    #[serde(default)]
    pub good: AgentSection,
    #[serde(default)]
    pub bad: AgentSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    /// Synthetic kind: separable, noisy, or text-like.
    pub synth: Option<String>,
    pub n: Option<usize>,
    pub dim: Option<usize>,
    /// CSV corpus path; mutually exclusive with `synth`.
    pub csv: Option<PathBuf>,
    pub featurizer: Option<String>,
    pub vocab_size: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainerSection {
    pub refund_wait: Option<u64>,
    pub takeover_wait: Option<u64>,
    pub deposit_numerator: Option<u64>,
    pub min_deposit: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSection {
    pub starting_balance: Option<u64>,
    pub max_deposit_mean: Option<f64>,
    pub max_deposit_std: Option<f64>,
    pub mean_update_interval: Option<f64>,
    pub p_incorrect_label: Option<f64>,
    pub submit_policy: Option<String>,
}

impl FileConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Ok(toml::from_str(&text)?)
    }

    /// Resolve into a runnable config, applying defaults for everything
    /// left unset.
    pub fn build(&self) -> Result<SimulationConfig, ConfigError> {
        let model_kind = parse_model_kind(
            self.model.as_deref().unwrap_or("perceptron"),
            self.sparse.unwrap_or(false),
        )?;
        let dataset = self.dataset.build()?;
        let mut trainer = TrainerConfig::default();
        if let Some(v) = self.trainer.refund_wait {
            trainer.refund_wait = v;
        }
        if let Some(v) = self.trainer.takeover_wait {
            trainer.takeover_wait = v;
        }
        if let Some(v) = self.trainer.deposit_numerator {
            trainer.deposit_numerator = v;
        }
        if let Some(v) = self.trainer.min_deposit {
            trainer.min_deposit = v;
        }
        Ok(SimulationConfig {
            model_kind,
            dataset,
            trainer,
            good: self.good.apply(AgentProfile::good())?,
            bad: self.bad.apply(AgentProfile::bad())?,
            seed: self.seed.unwrap_or(0),
            metrics_interval: self.metrics_interval.unwrap_or(DEFAULT_METRICS_INTERVAL),
            horizon: self.horizon.unwrap_or(DEFAULT_HORIZON),
        })
    }
}

impl DatasetSection {
    fn build(&self) -> Result<DatasetSpec, ConfigError> {
        if self.csv.is_some() && self.synth.is_some() {
            return Err(ConfigError::AmbiguousDataset);
        }
        if let Some(path) = &self.csv {
            return Ok(DatasetSpec::Csv {
                path: path.clone(),
                featurizer: parse_featurizer(self.featurizer.as_deref().unwrap_or("bigram-tf"))?,
                vocab_size: self.vocab_size.unwrap_or(DEFAULT_VOCAB_SIZE),
            });
        }
        let name = self.synth.as_deref().unwrap_or("separable");
        let kind = SynthKind::from_name(name)
            .ok_or_else(|| ConfigError::UnknownSynthKind(name.to_string()))?;
        Ok(DatasetSpec::Synthetic {
            kind,
            n: self.n.unwrap_or(DEFAULT_SYNTH_N),
            dim: self.dim.unwrap_or(DEFAULT_SYNTH_DIM),
        })
    }
}

impl AgentSection {
    fn apply(&self, mut profile: AgentProfile) -> Result<AgentProfile, ConfigError> {
        if let Some(v) = self.starting_balance {
            profile.starting_balance = v;
        }
        if let Some(v) = self.max_deposit_mean {
            profile.max_deposit_mean = v;
        }
        if let Some(v) = self.max_deposit_std {
            profile.max_deposit_std = v;
        }
        if let Some(v) = self.mean_update_interval {
            profile.mean_update_interval = v;
        }
        if let Some(v) = self.p_incorrect_label {
            profile.p_incorrect_label = v;
        }
        if let Some(name) = &self.submit_policy {
            profile.submit_policy = parse_submit_policy(name)?;
        }
        Ok(profile)
    }
}
