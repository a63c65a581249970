//! Shared test helpers: random toy models and a central-difference gradient oracle.
#![allow(dead_code)]

use hasa_core::nn::{model_backward, model_forward, LossGrads, ModelConfig, ModelParams, TaskSet, Tensor2};
use hasa_core::train::{task_loss_grad, total_loss, LossTerms, TaskTerms, TrainMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct ToyProblem {
    pub params: ModelParams<f64>,
    pub inputs: Vec<Tensor2<f64>>,
    pub targets: Vec<(f64, f64)>,
    pub mode: TrainMode,
    pub alpha: f64,
    pub beta: f64,
}

/// Feature dim <= 8, hidden <= 6, T <= 5, heads in {1, 2}.
pub fn toy_problem(seed: u64, mode: TrainMode) -> ToyProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let heads = rng.gen_range(1..=2);
    let config = ModelConfig {
        input_dim: rng.gen_range(2..=8),
        hidden: rng.gen_range(1..=6),
        dense: heads * rng.gen_range(1..=3),
        heads,
        tasks: mode_tasks(mode),
    };
    let params = ModelParams::init(config, &mut rng).unwrap();
    let n = rng.gen_range(1..=3);
    let inputs = (0..n)
        .map(|_| {
            let t = rng.gen_range(1..=5);
            Tensor2::from_fn(t, config.input_dim, |_, _| rng.gen_range(-1.5..1.5))
        })
        .collect();
    let targets = (0..n).map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))).collect();
    ToyProblem { params, inputs, targets, mode, alpha: 1.0, beta: 1.5 }
}

fn mode_tasks(mode: TrainMode) -> TaskSet {
    mode.task_set()
}

fn terms_for(params: &ModelParams<f64>, p: &ToyProblem) -> LossTerms<f64> {
    let mut terms = LossTerms { quality: vec![], intelligibility: vec![], alpha: p.alpha, beta: p.beta };
    for (x, &(q, i)) in p.inputs.iter().zip(&p.targets) {
        let (out, _) = model_forward(x, params).unwrap();
        if let Some(o) = out.quality {
            terms.quality.push(TaskTerms { target: q, score: o.score, frames: o.frame_scores });
        }
        if let Some(o) = out.intelligibility {
            terms.intelligibility.push(TaskTerms { target: i, score: o.score, frames: o.frame_scores });
        }
    }
    terms
}

pub fn loss_at(params: &ModelParams<f64>, p: &ToyProblem) -> f64 {
    total_loss(&terms_for(params, p), p.mode).unwrap()
}

pub fn analytic_grads(p: &ToyProblem) -> ModelParams<f64> {
    let n = p.inputs.len();
    let (wq, wi) = match p.mode {
        TrainMode::Multitask => (p.alpha, p.beta),
        _ => (1.0, 1.0),
    };
    let mut acc = p.params.zeros_like();
    for (x, &(q, i)) in p.inputs.iter().zip(&p.targets) {
        let (out, trace) = model_forward(x, &p.params).unwrap();
        let lg = LossGrads {
            quality: out.quality.map(|o| {
                task_loss_grad(&TaskTerms { target: q, score: o.score, frames: o.frame_scores }, n, wq)
            }),
            intelligibility: out.intelligibility.map(|o| {
                task_loss_grad(&TaskTerms { target: i, score: o.score, frames: o.frame_scores }, n, wi)
            }),
        };
        acc.add_assign(&model_backward(&p.params, trace, &lg).unwrap());
    }
    acc
}

/// Central-difference step.
pub const GRAD_EPS: f64 = 1e-5;
/// Denominator floor of the relative error. At `GRAD_EPS` the difference quotient
/// carries ~1e-10 absolute roundoff, so smaller gradients are compared absolutely.
pub const REL_FLOOR: f64 = 1e-4;

pub struct GradCheck {
    pub max_rel_error: f64,
    pub worst: String,
    pub checked: usize,
}

/// Relative error `|a − n| / max(|a|, |n|, floor)`, with central differences at `eps`.
pub fn grad_check(p: &ToyProblem, eps: f64, floor: f64) -> GradCheck {
    let analytic = analytic_grads(p);
    let names: Vec<String> = p.params.named_tensors().into_iter().map(|(n, _)| n).collect();
    let analytic_vals: Vec<Vec<f64>> =
        analytic.named_tensors().into_iter().map(|(_, t)| t.data().to_vec()).collect();
    let mut worst = (0.0, String::new());
    let mut checked = 0;
    for (ti, name) in names.iter().enumerate() {
        for k in 0..analytic_vals[ti].len() {
            let mut plus = p.params.clone();
            plus.tensors_mut()[ti].data_mut()[k] += eps;
            let mut minus = p.params.clone();
            minus.tensors_mut()[ti].data_mut()[k] -= eps;
            let numeric = (loss_at(&plus, p) - loss_at(&minus, p)) / (2.0 * eps);
            let a = analytic_vals[ti][k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            if rel > worst.0 {
                worst = (rel, format!("{name}[{k}]: analytic {a:e} numeric {numeric:e}"));
            }
            checked += 1;
        }
    }
    GradCheck { max_rel_error: worst.0, worst: worst.1, checked }
}
