use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::attention::{attention_backward, multihead_self_attention, AttentionTrace, AttentionWeights};
use super::lstm::{blstm_backward, blstm_forward, BlstmTrace, BlstmWeights, LstmWeights};
use super::tensor::Tensor2;
use super::{glorot, NnError, Result};
use crate::dsp::Spectrogram;
use crate::hearing::Audiogram;
use crate::{sigmoid, Scalar};

/// Audiogram thresholds are divided by this before joining the spectral features.
pub const AUDIOGRAM_SCALE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Quality,
    Intelligibility,
}

impl Task {
    pub const BOTH: [Task; 2] = [Task::Quality, Task::Intelligibility];

    pub fn name(self) -> &'static str {
        match self {
            Task::Quality => "quality",
            Task::Intelligibility => "intelligibility",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which task branches a model carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskSet {
    Both,
    QualityOnly,
    IntelligibilityOnly,
}

impl TaskSet {
    pub fn contains(self, task: Task) -> bool {
        matches!(
            (self, task),
            (TaskSet::Both, _) | (TaskSet::QualityOnly, Task::Quality) | (TaskSet::IntelligibilityOnly, Task::Intelligibility)
        )
    }

    pub fn tasks(self) -> Vec<Task> {
        Task::BOTH.into_iter().filter(|t| self.contains(*t)).collect()
    }

    pub fn flags(self) -> u32 {
        self.tasks().iter().map(|t| if *t == Task::Quality { 1 } else { 2 }).sum()
    }

    pub fn from_flags(flags: u32) -> Option<Self> {
        match flags {
            1 => Some(TaskSet::QualityOnly),
            2 => Some(TaskSet::IntelligibilityOnly),
            3 => Some(TaskSet::Both),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_dim: usize,
    /// LSTM units per direction.
    pub hidden: usize,
    /// Shared dense width, also the attention model dimension.
    pub dense: usize,
    pub heads: usize,
    pub tasks: TaskSet,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_dim: crate::dsp::NUM_BINS + 6,
            hidden: 100,
            dense: 128,
            heads: 4,
            tasks: TaskSet::Both,
        }
    }
}

impl ModelConfig {
    pub fn with_tasks(self, tasks: TaskSet) -> Self {
        Self { tasks, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 || self.dense == 0 {
            return Err(NnError::Shape(format!("degenerate model dimensions {self:?}")));
        }
        if self.heads == 0 || self.dense % self.heads != 0 {
            return Err(NnError::Shape(format!("{} heads do not divide dense width {}", self.heads, self.dense)));
        }
        Ok(())
    }

    pub fn lstm_direction_parameters(&self) -> usize {
        4 * self.hidden * (self.input_dim + self.hidden + 1)
    }

    pub fn trunk_parameters(&self) -> usize {
        2 * self.lstm_direction_parameters() + 2 * self.hidden * self.dense + self.dense
    }

    pub fn branch_parameters(&self) -> usize {
        4 * self.dense * self.dense + self.dense + 1
    }

    pub fn parameter_count(&self) -> usize {
        self.trunk_parameters() + self.tasks.tasks().len() * self.branch_parameters()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    /// `in × out`
    pub weight: Tensor2<T>,
    /// `1 × out`
    pub bias: Tensor2<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self { weight: Tensor2::zeros(fan_in, fan_out), bias: Tensor2::zeros(1, fan_out) }
    }

    pub fn init<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        Self { weight: glorot(fan_in, fan_out, rng), bias: Tensor2::zeros(1, fan_out) }
    }

    pub fn forward(&self, x: &Tensor2<T>) -> Tensor2<T> {
        let mut y = x.matmul(&self.weight);
        y.add_row_in_place(&self.bias);
        y
    }

    /// Gradients for `y = x W + b` given `d_y`.
    fn grads(&self, x: &Tensor2<T>, d_y: &Tensor2<T>) -> Self {
        Self { weight: x.matmul_tn(d_y), bias: d_y.col_sums() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskBranch<T> {
    pub attention: AttentionWeights<T>,
    /// `dense × 1` frame scorer.
    pub head: Dense<T>,
}

impl<T: Scalar> TaskBranch<T> {
    fn zeros(dim: usize) -> Self {
        Self { attention: AttentionWeights::zeros(dim), head: Dense::zeros(dim, 1) }
    }

    fn init<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self { attention: AttentionWeights::init(dim, rng), head: Dense::init(dim, 1, rng) }
    }
}

/// All trainable weights. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub config: ModelConfig,
    pub blstm: BlstmWeights<T>,
    pub shared: Dense<T>,
    pub quality: Option<TaskBranch<T>>,
    pub intelligibility: Option<TaskBranch<T>>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn zeros(config: ModelConfig) -> Self {
        let branch = |t| config.tasks.contains(t).then(|| TaskBranch::zeros(config.dense));
        Self {
            config,
            blstm: BlstmWeights {
                forward: LstmWeights::zeros(config.input_dim, config.hidden),
                backward: LstmWeights::zeros(config.input_dim, config.hidden),
            },
            shared: Dense::zeros(2 * config.hidden, config.dense),
            quality: branch(Task::Quality),
            intelligibility: branch(Task::Intelligibility),
        }
    }

    pub fn init<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let blstm = BlstmWeights {
            forward: LstmWeights::init(config.input_dim, config.hidden, rng),
            backward: LstmWeights::init(config.input_dim, config.hidden, rng),
        };
        let shared = Dense::init(2 * config.hidden, config.dense, rng);
        // branches are always drawn so the trunk and each branch get the same
        // initial weights whichever subset of tasks is kept
        let quality = TaskBranch::init(config.dense, rng);
        let intelligibility = TaskBranch::init(config.dense, rng);
        Ok(Self {
            config,
            blstm,
            shared,
            quality: config.tasks.contains(Task::Quality).then_some(quality),
            intelligibility: config.tasks.contains(Task::Intelligibility).then_some(intelligibility),
        })
    }

    pub fn branch(&self, task: Task) -> Option<&TaskBranch<T>> {
        match task {
            Task::Quality => self.quality.as_ref(),
            Task::Intelligibility => self.intelligibility.as_ref(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.config)
    }

    /// Named tensors in checkpoint order.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor2<T>)> {
        let mut out: Vec<(String, &Tensor2<T>)> = Vec::new();
        for (dir, w) in [("forward", &self.blstm.forward), ("backward", &self.blstm.backward)] {
            out.push((format!("blstm.{dir}.w_input"), &w.w_input));
            out.push((format!("blstm.{dir}.w_hidden"), &w.w_hidden));
            out.push((format!("blstm.{dir}.bias"), &w.bias));
        }
        out.push(("shared.weight".into(), &self.shared.weight));
        out.push(("shared.bias".into(), &self.shared.bias));
        for (name, b) in [("quality", &self.quality), ("intelligibility", &self.intelligibility)] {
            if let Some(b) = b {
                out.push((format!("{name}.attention.w_query"), &b.attention.w_query));
                out.push((format!("{name}.attention.w_key"), &b.attention.w_key));
                out.push((format!("{name}.attention.w_value"), &b.attention.w_value));
                out.push((format!("{name}.attention.w_output"), &b.attention.w_output));
                out.push((format!("{name}.head.weight"), &b.head.weight));
                out.push((format!("{name}.head.bias"), &b.head.bias));
            }
        }
        out
    }

    /// Mutable tensors in the same order as [`Self::named_tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor2<T>> {
        let mut out: Vec<&mut Tensor2<T>> = Vec::new();
        for w in [&mut self.blstm.forward, &mut self.blstm.backward] {
            out.push(&mut w.w_input);
            out.push(&mut w.w_hidden);
            out.push(&mut w.bias);
        }
        out.push(&mut self.shared.weight);
        out.push(&mut self.shared.bias);
        for b in [self.quality.as_mut(), self.intelligibility.as_mut()].into_iter().flatten() {
            out.push(&mut b.attention.w_query);
            out.push(&mut b.attention.w_key);
            out.push(&mut b.attention.w_value);
            out.push(&mut b.attention.w_output);
            out.push(&mut b.head.weight);
            out.push(&mut b.head.bias);
        }
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.data().len()).sum()
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.config, other.config, "parameter sets differ in layout");
        let others: Vec<&Tensor2<T>> = other.named_tensors().into_iter().map(|(_, t)| t).collect();
        for (a, b) in self.tensors_mut().into_iter().zip(others) {
            a.add_assign(b);
        }
    }

    pub fn scale_in_place(&mut self, s: T) {
        for t in self.tensors_mut() {
            t.scale_in_place(s);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.named_tensors().iter().all(|(_, t)| t.all_finite())
    }

    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        let mut out = ModelParams::<U>::zeros(self.config);
        let src: Vec<Tensor2<U>> = self.named_tensors().into_iter().map(|(_, t)| t.cast()).collect();
        for (dst, s) in out.tensors_mut().into_iter().zip(src) {
            *dst = s;
        }
        out
    }
}

/// `[257 magnitudes, 6 thresholds / 100]` per frame.
pub fn concat_inputs<T: Scalar>(spec: &Spectrogram, audiogram: &Audiogram) -> Tensor2<T> {
    concat_inputs_with(spec, audiogram, false)
}

/// As [`concat_inputs`], optionally replacing magnitudes by `ln(1 + m)`.
pub fn concat_inputs_with<T: Scalar>(spec: &Spectrogram, audiogram: &Audiogram, log_compress: bool) -> Tensor2<T> {
    let bins = spec.bins();
    Tensor2::from_fn(spec.frames(), bins + 6, |t, j| {
        if j < bins {
            let m = spec.frame(t)[j];
            T::lit(if log_compress { m.ln_1p() } else { m })
        } else {
            T::lit(audiogram.thresholds_db_hl[j - bins] / AUDIOGRAM_SCALE)
        }
    })
}

/// Per-frame `sigmoid(w · x_t + b)`.
pub fn frame_head<T: Scalar>(x: &Tensor2<T>, head: &Dense<T>) -> Vec<T> {
    head.forward(x).data().iter().map(|&z| sigmoid(z)).collect()
}

pub fn global_average_pool<T: Scalar>(frame_scores: &[T]) -> T {
    assert!(!frame_scores.is_empty(), "pooling needs at least one frame");
    frame_scores.iter().copied().sum::<T>() / T::from_usize_lossy(frame_scores.len())
}

#[derive(Debug, Clone)]
pub struct TaskOutput<T> {
    pub frame_scores: Vec<T>,
    pub score: T,
    /// Per-head attention matrices.
    pub attention: Vec<Tensor2<T>>,
}

#[derive(Debug, Clone)]
pub struct ModelOutput<T> {
    pub quality: Option<TaskOutput<T>>,
    pub intelligibility: Option<TaskOutput<T>>,
}

impl<T> ModelOutput<T> {
    pub fn task(&self, task: Task) -> Option<&TaskOutput<T>> {
        match task {
            Task::Quality => self.quality.as_ref(),
            Task::Intelligibility => self.intelligibility.as_ref(),
        }
    }
}

#[derive(Debug)]
struct BranchTrace<T> {
    attention: AttentionTrace<T>,
    attended: Tensor2<T>,
    frame_scores: Vec<T>,
}

/// Cached activations of one forward pass; consumed by [`model_backward`].
#[derive(Debug)]
pub struct ModelTrace<T> {
    blstm: BlstmTrace<T>,
    blstm_out: Tensor2<T>,
    dense_pre: Tensor2<T>,
    shared: Tensor2<T>,
    quality: Option<BranchTrace<T>>,
    intelligibility: Option<BranchTrace<T>>,
}

fn branch_forward<T: Scalar>(x: &Tensor2<T>, b: &TaskBranch<T>, heads: usize) -> Result<(TaskOutput<T>, BranchTrace<T>)> {
    let (attended, attention) = multihead_self_attention(x, &b.attention, heads)?;
    let frame_scores = frame_head(&attended, &b.head);
    if frame_scores.iter().any(|s| !s.is_finite()) {
        return Err(NnError::NumericalBlowup("frame head"));
    }
    let out = TaskOutput {
        score: global_average_pool(&frame_scores),
        frame_scores: frame_scores.clone(),
        attention: attention.weights().to_vec(),
    };
    Ok((out, BranchTrace { attention, attended, frame_scores }))
}

pub fn model_forward<T: Scalar>(input: &Tensor2<T>, params: &ModelParams<T>) -> Result<(ModelOutput<T>, ModelTrace<T>)> {
    let (blstm_out, blstm) = blstm_forward(input, &params.blstm)?;
    let dense_pre = params.shared.forward(&blstm_out);
    let shared = dense_pre.map(|v| v.max(T::zero()));
    let heads = params.config.heads;
    let run = |b: &Option<TaskBranch<T>>| b.as_ref().map(|b| branch_forward(&shared, b, heads)).transpose();
    let q = run(&params.quality)?;
    let i = run(&params.intelligibility)?;
    let (q_out, q_tr) = q.map_or((None, None), |(o, t)| (Some(o), Some(t)));
    let (i_out, i_tr) = i.map_or((None, None), |(o, t)| (Some(o), Some(t)));
    Ok((
        ModelOutput { quality: q_out, intelligibility: i_out },
        ModelTrace { blstm, blstm_out, dense_pre, shared, quality: q_tr, intelligibility: i_tr },
    ))
}

/// Loss gradient w.r.t. one task's pooled score and its frame scores.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskGrad<T> {
    pub d_score: T,
    pub d_frames: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrads<T> {
    pub quality: Option<TaskGrad<T>>,
    pub intelligibility: Option<TaskGrad<T>>,
}

fn branch_backward<T: Scalar>(
    b: &TaskBranch<T>,
    tr: BranchTrace<T>,
    g: &TaskGrad<T>,
) -> Result<(TaskBranch<T>, Tensor2<T>)> {
    let steps = tr.frame_scores.len();
    if g.d_frames.len() != steps {
        return Err(NnError::Shape(format!("{} frame gradients for {steps} frames", g.d_frames.len())));
    }
    let pool = g.d_score / T::from_usize_lossy(steps);
    let d_logit: Vec<T> = tr
        .frame_scores
        .iter()
        .zip(&g.d_frames)
        .map(|(&s, &d)| (d + pool) * s * (T::one() - s))
        .collect();
    let d_logit = Tensor2::from_vec(steps, 1, d_logit).expect("column shape");
    let head = b.head.grads(&tr.attended, &d_logit);
    let d_attended = d_logit.matmul_nt(&b.head.weight);
    let (attention, d_x) = attention_backward(&b.attention, tr.attention, &d_attended);
    Ok((TaskBranch { attention, head }, d_x))
}

/// Exact parameter gradients. A task without a gradient contributes zero.
pub fn model_backward<T: Scalar>(params: &ModelParams<T>, trace: ModelTrace<T>, grads: &LossGrads<T>) -> Result<ModelParams<T>> {
    for (task, g) in [(Task::Quality, &grads.quality), (Task::Intelligibility, &grads.intelligibility)] {
        if g.is_some() && params.branch(task).is_none() {
            return Err(NnError::MissingBranch(task));
        }
    }
    let mut out = params.zeros_like();
    let mut d_shared = Tensor2::zeros(trace.shared.rows(), trace.shared.cols());
    for (slot, branch, tr, g) in [
        (&mut out.quality, &params.quality, trace.quality, &grads.quality),
        (&mut out.intelligibility, &params.intelligibility, trace.intelligibility, &grads.intelligibility),
    ] {
        if let (Some(b), Some(tr), Some(g)) = (branch, tr, g) {
            let (bg, d_x) = branch_backward(b, tr, g)?;
            *slot = Some(bg);
            d_shared.add_assign(&d_x);
        }
    }
    let mut d_pre = d_shared;
    for (d, &pre) in d_pre.data_mut().iter_mut().zip(trace.dense_pre.data()) {
        if pre <= T::zero() {
            *d = T::zero();
        }
    }
    out.shared = params.shared.grads(&trace.blstm_out, &d_pre);
    let d_blstm = d_pre.matmul_nt(&params.shared.weight);
    out.blstm = blstm_backward(&params.blstm, trace.blstm, &d_blstm);
    Ok(out)
}
