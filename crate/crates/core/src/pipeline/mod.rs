//! End-to-end steps shared by the command-line tool and the demo:
//! synthesize → labels → train → predict → evaluate, plus the task ablation.

mod config;
mod demo;
mod steps;
mod synthetic;

pub use config::{FeatureConfig, ModelShape, Precision, RunConfig};
pub use demo::{run_demo, DemoOptions, DemoSummary};
pub use steps::{
    ablation, attach_label_file, evaluate, load_examples, predict, predict_records, read_manifest, scan_audio_dir,
    surrogate_label_file, synthesize, train, write_text, CorpusKind, TrainSummary, HISTORY_FILE, MODEL_FILE, RUN_FILE,
};
pub use synthetic::{noise_signal, speechlike_signal, DemoNoise, TEST_NOISES, TRAIN_NOISES};

use std::path::PathBuf;

use thiserror::Error;

use crate::dsp::DspError;
use crate::eval::EvalError;
use crate::hearing::HearingError;
use crate::labels::LabelError;
use crate::nn::NnError;
use crate::synth::SynthError;
use crate::train::TrainError;

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Bad invocation detected before any work starts.
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("configuration: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Labels { context: String, source: LabelError },
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Hearing(#[from] HearingError),
}

impl From<LabelError> for PipelineError {
    fn from(source: LabelError) -> Self {
        PipelineError::Labels { context: "labels".into(), source }
    }
}

impl PipelineError {
    pub fn is_usage(&self) -> bool {
        matches!(self, PipelineError::Usage(_))
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;
