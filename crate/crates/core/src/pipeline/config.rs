use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};
use crate::nn::ModelConfig;
use crate::train::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(format!("unknown precision {other:?} (expected f32 or f64)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelShape {
    /// LSTM units per direction.
    pub hidden: usize,
    pub dense: usize,
    pub heads: usize,
}

impl Default for ModelShape {
    fn default() -> Self {
        let d = ModelConfig::default();
        Self { hidden: d.hidden, dense: d.dense, heads: d.heads }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Feed ln(1 + magnitude) instead of raw magnitudes.
    pub log_magnitude: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { log_magnitude: true }
    }
}

/// Everything a training run depends on. Serialized next to the checkpoint so
/// prediction reuses the same feature settings.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub precision: Precision,
    pub model: ModelShape,
    pub features: FeatureConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            hidden: self.model.hidden,
            dense: self.model.dense,
            heads: self.model.heads,
            tasks: self.train.mode.task_set(),
            ..ModelConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.model_config().validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::TrainMode;

    #[test]
    fn toml_round_trip_and_partial_files() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let partial = RunConfig::from_toml("precision = \"f32\"\n[train]\nmax_epochs = 3\nmode = \"quality-only\"\n").unwrap();
        assert_eq!(partial.precision, Precision::F32);
        assert_eq!(partial.train.max_epochs, 3);
        assert_eq!(partial.train.mode, TrainMode::QualityOnly);
        assert_eq!(partial.train.learning_rate, 1e-3);
        assert_eq!(partial.model, ModelShape::default());
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(RunConfig::from_toml("[train]\nlearnin_rate = 0.1\n").is_err());
        assert!(RunConfig::from_toml("[model]\ndense = 10\nheads = 4\n").is_err());
        assert!(RunConfig::from_toml("[train]\nbatch_size = 0\n").is_err());
    }
}
