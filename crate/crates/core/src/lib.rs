//! Non-intrusive hearing-aid speech assessment.
//!
//! The crate covers corpus synthesis (noise mixing, audiogram assignment,
//! NAL-R amplification), a BLSTM + multi-head attention multi-task network with
//! hand-written gradients, RMSprop training with early stopping, label providers,
//! and MSE/LCC/SRCC evaluation broken down by hearing-loss configuration.
//!
//! The numerical core (`nn`, `train`, `eval`) is generic over [`Scalar`]; the
//! aliases below pin the two precisions the pipeline uses.

pub mod dsp;
pub mod eval;
pub mod hearing;
pub mod labels;
pub mod nn;
pub mod pipeline;
pub mod synth;
pub mod train;
pub mod util;
mod scalar;

pub use scalar::{sigmoid, Scalar};

pub type Tensor2F32 = nn::Tensor2<f32>;
pub type Tensor2F64 = nn::Tensor2<f64>;
pub type ModelParamsF32 = nn::ModelParams<f32>;
pub type ModelParamsF64 = nn::ModelParams<f64>;
pub type ExampleF32 = train::Example<f32>;
pub type ExampleF64 = train::Example<f64>;
pub type FitResultF32 = train::FitResult<f32>;
pub type FitResultF64 = train::FitResult<f64>;
