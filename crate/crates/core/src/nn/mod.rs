//! Dense-tensor numerical core with exact reverse-mode gradients for the
//! assessment network: BLSTM trunk, shared ReLU dense layer, and one
//! attention + sigmoid frame head + average pooling branch per task.

mod attention;
mod checkpoint;
mod lstm;
mod model;
mod tensor;

pub use attention::{attention_backward, multihead_self_attention, AttentionTrace, AttentionWeights};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use lstm::{blstm_backward, blstm_forward, BlstmTrace, BlstmWeights, LstmWeights};
pub use model::{
    concat_inputs, concat_inputs_with, frame_head, global_average_pool, model_backward, model_forward, Dense,
    LossGrads, ModelConfig, ModelOutput, ModelParams, ModelTrace, Task, TaskBranch, TaskGrad, TaskOutput, TaskSet,
    AUDIOGRAM_SCALE,
};
pub use tensor::Tensor2;

use rand::Rng;
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("numerical blowup in {0}")]
    NumericalBlowup(&'static str),
    #[error("model has no {0} branch")]
    MissingBranch(Task),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NnError>;

/// Glorot-uniform initialization.
pub(crate) fn glorot<T: Scalar, R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Tensor2<T> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Tensor2::from_fn(fan_in, fan_out, |_, _| T::lit(rng.gen_range(-bound..bound)))
}
