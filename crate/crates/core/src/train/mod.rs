//! Multi-task loss, RMSprop, and the early-stopping training loop.

mod fit;
mod loss;
mod rmsprop;

pub use fit::{epoch_order, fit, fit_single_task, predict, EpochRecord, Example, FitResult};
pub use loss::{
    intelligibility_loss, quality_loss, task_loss, task_loss_grad, total_loss, utterance_task_loss, LossTerms, TaskTerms,
};
pub use rmsprop::{rmsprop_step, RmsPropState};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{NnError, TaskSet};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("utterance with no frames")]
    NoFrames,
    #[error("score {0} outside [0, 1]")]
    ScoreRange(f64),
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch} (first utterance {utterance})")]
    NonFinite { epoch: usize, batch: usize, utterance: String },
    #[error(transparent)]
    Nn(#[from] NnError),
}

pub type Result<T> = std::result::Result<T, TrainError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainMode {
    Multitask,
    QualityOnly,
    IntelligibilityOnly,
}

impl TrainMode {
    pub fn task_set(self) -> TaskSet {
        match self {
            TrainMode::Multitask => TaskSet::Both,
            TrainMode::QualityOnly => TaskSet::QualityOnly,
            TrainMode::IntelligibilityOnly => TaskSet::IntelligibilityOnly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// RMSprop decay of the squared-gradient average.
    pub rho: f64,
    pub epsilon: f64,
    /// Utterances per parameter update.
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without VAL improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub mode: TrainMode,
    pub alpha: f64,
    pub beta: f64,
    /// Record wall-clock seconds per epoch in the history.
    pub record_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            rho: 0.9,
            epsilon: 1e-8,
            batch_size: 32,
            max_epochs: 100,
            patience: 5,
            seed: 0,
            mode: TrainMode::Multitask,
            alpha: 1.0,
            beta: 1.5,
            record_wall_time: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad("rho must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1");
        }
        if self.mode == TrainMode::Multitask && !(self.alpha > 0.0 && self.beta > 0.0) {
            return bad("alpha and beta must be positive");
        }
        Ok(())
    }
}
