use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{task_loss_grad, utterance_task_loss, TaskTerms};
use super::rmsprop::{rmsprop_step, RmsPropState};
use super::{Result, TrainConfig, TrainError, TrainMode};
use crate::nn::{model_backward, model_forward, LossGrads, ModelParams, Task, Tensor2};
use crate::Scalar;

/// One realized utterance: network input plus true scores.
#[derive(Debug, Clone)]
pub struct Example<T> {
    pub id: String,
    pub input: Tensor2<T>,
    pub quality: T,
    pub intelligibility: T,
}

impl<T: Scalar> Example<T> {
    fn target(&self, task: Task) -> T {
        match task {
            Task::Quality => self.quality,
            Task::Intelligibility => self.intelligibility,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_quality: Option<f64>,
    pub train_intelligibility: Option<f64>,
    pub train_total: f64,
    pub val_total: f64,
    pub wall_time: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FitResult<T> {
    pub best_params: ModelParams<T>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
    pub stopped_early: bool,
}

/// Utterance visiting order for one epoch; depends only on `(seed, epoch, n)`.
pub fn epoch_order(seed: u64, epoch: usize, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    order.shuffle(&mut rng);
    order
}

/// Pooled scores for one input: `(quality, intelligibility)`, absent for a missing branch.
pub fn predict<T: Scalar>(params: &ModelParams<T>, input: &Tensor2<T>) -> Result<(Option<T>, Option<T>)> {
    let (out, _) = model_forward(input, params)?;
    Ok((out.quality.map(|o| o.score), out.intelligibility.map(|o| o.score)))
}

struct UtteranceResult<T> {
    losses: [Option<T>; 2],
    grads: Option<ModelParams<T>>,
}

fn task_weight<T: Scalar>(config: &TrainConfig, task: Task) -> T {
    match (config.mode, task) {
        (TrainMode::Multitask, Task::Quality) => T::lit(config.alpha),
        (TrainMode::Multitask, Task::Intelligibility) => T::lit(config.beta),
        _ => T::one(),
    }
}

fn run_utterance<T: Scalar>(
    params: &ModelParams<T>,
    ex: &Example<T>,
    config: &TrainConfig,
    batch_len: usize,
    with_grads: bool,
) -> Result<UtteranceResult<T>> {
    let (out, trace) = model_forward(&ex.input, params)?;
    let mut losses = [None, None];
    let mut lg = LossGrads { quality: None, intelligibility: None };
    for (k, task) in Task::BOTH.into_iter().enumerate() {
        if !config.mode.task_set().contains(task) {
            continue;
        }
        let o = out.task(task).ok_or(crate::nn::NnError::MissingBranch(task))?;
        let terms = TaskTerms { target: ex.target(task), score: o.score, frames: o.frame_scores.clone() };
        losses[k] = Some(utterance_task_loss(&terms));
        if with_grads {
            let g = task_loss_grad(&terms, batch_len, task_weight(config, task));
            match task {
                Task::Quality => lg.quality = Some(g),
                Task::Intelligibility => lg.intelligibility = Some(g),
            }
        }
    }
    let grads = if with_grads { Some(model_backward(params, trace, &lg)?) } else { None };
    Ok(UtteranceResult { losses, grads })
}

fn combine<T: Scalar>(config: &TrainConfig, losses: [Option<T>; 2]) -> T {
    let mut total = T::zero();
    for (task, l) in Task::BOTH.into_iter().zip(losses) {
        if let Some(l) = l {
            total += task_weight::<T>(config, task) * l;
        }
    }
    total
}

fn mean_losses<T: Scalar>(
    params: &ModelParams<T>,
    data: &[Example<T>],
    config: &TrainConfig,
) -> Result<[Option<T>; 2]> {
    let per: Vec<[Option<T>; 2]> = data
        .par_iter()
        .map(|ex| run_utterance(params, ex, config, data.len(), false).map(|r| r.losses))
        .collect::<Result<_>>()?;
    let n = T::from_usize_lossy(data.len());
    let mut out = [None, None];
    for k in 0..2 {
        if per.iter().all(|l| l[k].is_some()) {
            out[k] = Some(per.iter().map(|l| l[k].unwrap()).sum::<T>() / n);
        }
    }
    Ok(out)
}

fn check_examples<T: Scalar>(data: &[Example<T>], input_dim: usize) -> Result<()> {
    for ex in data {
        if ex.input.cols() != input_dim || ex.input.rows() == 0 {
            return Err(TrainError::ShapeMismatch(format!(
                "{}: input {:?}, model expects {input_dim} columns",
                ex.id,
                ex.input.shape()
            )));
        }
        for s in [ex.quality, ex.intelligibility] {
            if !(s >= T::zero() && s <= T::one()) {
                return Err(TrainError::ScoreRange(s.as_f64()));
            }
        }
    }
    Ok(())
}

/// Trains with seeded shuffling and early stopping on VAL total loss.
///
/// Per-utterance gradients inside a batch are computed in parallel and summed
/// in index order, so results do not depend on the worker count.
pub fn fit<T: Scalar>(
    train: &[Example<T>],
    val: &[Example<T>],
    params: ModelParams<T>,
    config: &TrainConfig,
) -> Result<FitResult<T>> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(TrainError::Config("TRAIN and VAL sets must be non-empty".into()));
    }
    if params.config.tasks != config.mode.task_set() {
        return Err(TrainError::Config(format!(
            "model carries {:?} but mode is {:?}",
            params.config.tasks, config.mode
        )));
    }
    check_examples(train, params.config.input_dim)?;
    check_examples(val, params.config.input_dim)?;

    let mut params = params;
    let mut state = RmsPropState::new(&params);
    let mut best: Option<(T, ModelParams<T>, usize)> = None;
    let mut since_best = 0;
    let mut history = Vec::new();
    let mut stopped_early = false;
    let chunk = rayon::current_num_threads().max(1);

    for epoch in 1..=config.max_epochs {
        let started = Instant::now();
        let order = epoch_order(config.seed, epoch, train.len());
        let mut sums = [T::zero(); 2];
        for (batch_id, batch) in order.chunks(config.batch_size).enumerate() {
            let mut acc = params.zeros_like();
            let mut batch_total = T::zero();
            for part in batch.chunks(chunk) {
                let results: Vec<UtteranceResult<T>> = part
                    .par_iter()
                    .map(|&i| run_utterance(&params, &train[i], config, batch.len(), true))
                    .collect::<Result<_>>()?;
                for r in results {
                    for k in 0..2 {
                        if let Some(l) = r.losses[k] {
                            sums[k] += l;
                        }
                    }
                    batch_total += combine(config, r.losses);
                    acc.add_assign(r.grads.as_ref().expect("gradients requested"));
                }
            }
            if !batch_total.is_finite() || !acc.all_finite() {
                return Err(TrainError::NonFinite { epoch, batch: batch_id, utterance: train[batch[0]].id.clone() });
            }
            rmsprop_step(&mut params, &acc, &mut state, config)?;
        }

        let n = T::from_usize_lossy(train.len());
        let train_losses: [Option<T>; 2] = std::array::from_fn(|k| {
            config.mode.task_set().contains(Task::BOTH[k]).then(|| sums[k] / n)
        });
        let val_total = combine(config, mean_losses(&params, val, config)?);
        if !val_total.is_finite() {
            return Err(TrainError::NonFinite { epoch, batch: usize::MAX, utterance: val[0].id.clone() });
        }
        history.push(EpochRecord {
            epoch,
            train_quality: train_losses[0].map(Scalar::as_f64),
            train_intelligibility: train_losses[1].map(Scalar::as_f64),
            train_total: combine(config, train_losses).as_f64(),
            val_total: val_total.as_f64(),
            wall_time: config.record_wall_time.then(|| started.elapsed().as_secs_f64()),
        });
        log::info!(
            "epoch {epoch}: train {:.6} val {:.6}",
            history[epoch - 1].train_total,
            history[epoch - 1].val_total
        );

        let improved = best.as_ref().is_none_or(|(b, _, _)| val_total < *b);
        if improved {
            best = Some((val_total, params.clone(), epoch));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                stopped_early = epoch < config.max_epochs;
                break;
            }
        }
    }
    let (_, best_params, best_epoch) = best.expect("at least one epoch ran");
    Ok(FitResult { best_params, best_epoch, history, stopped_early })
}

/// [`fit`] restricted to one task; the model must carry only that branch.
pub fn fit_single_task<T: Scalar>(
    train: &[Example<T>],
    val: &[Example<T>],
    params: ModelParams<T>,
    config: &TrainConfig,
) -> Result<FitResult<T>> {
    if config.mode == TrainMode::Multitask {
        return Err(TrainError::Config("single-task training needs a quality-only or intelligibility-only mode".into()));
    }
    fit(train, val, params, config)
}
