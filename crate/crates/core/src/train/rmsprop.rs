use super::{Result, TrainConfig, TrainError};
use crate::nn::{ModelParams, Tensor2};
use crate::Scalar;

/// Running average of squared gradients, one tensor per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsPropState<T> {
    pub mean_square: Vec<Tensor2<T>>,
}

impl<T: Scalar> RmsPropState<T> {
    pub fn new(params: &ModelParams<T>) -> Self {
        Self {
            mean_square: params
                .named_tensors()
                .into_iter()
                .map(|(_, t)| Tensor2::zeros(t.rows(), t.cols()))
                .collect(),
        }
    }
}

/// `v ← ρ v + (1 − ρ) g²;  θ ← θ − lr · g / (√v + ε)`, elementwise.
pub fn rmsprop_step<T: Scalar>(
    params: &mut ModelParams<T>,
    grads: &ModelParams<T>,
    state: &mut RmsPropState<T>,
    config: &TrainConfig,
) -> Result<()> {
    if params.config != grads.config {
        return Err(TrainError::ShapeMismatch("gradient layout differs from parameters".into()));
    }
    let g_all = grads.named_tensors();
    let p_all = params.tensors_mut();
    if state.mean_square.len() != p_all.len() {
        return Err(TrainError::ShapeMismatch("optimizer state layout differs from parameters".into()));
    }
    let (lr, rho, eps) = (T::lit(config.learning_rate), T::lit(config.rho), T::lit(config.epsilon));
    let keep = T::one() - rho;
    for ((p, (name, g)), v) in p_all.into_iter().zip(g_all).zip(&mut state.mean_square) {
        if p.shape() != g.shape() || p.shape() != v.shape() {
            return Err(TrainError::ShapeMismatch(format!("{name}: {:?} vs {:?}", p.shape(), g.shape())));
        }
        for ((theta, &gi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(v.data_mut()) {
            *vi = rho * *vi + keep * gi * gi;
            *theta -= lr * gi / (vi.sqrt() + eps);
        }
    }
    Ok(())
}
