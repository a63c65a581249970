//! Utterance-level plus frame-averaged squared error, per task:
//!
//! `L = 1/N Σ_n [ (y_n − ŷ_n)² + 1/T_n Σ_t (y_n − ŷ_{n,t})² ]`
//!
//! where `y_n` is the true utterance score, `ŷ_n` the pooled prediction and
//! `ŷ_{n,t}` the frame predictions. Frame scores are compared against the true
//! utterance score.

use super::{Result, TrainError, TrainMode};
use crate::nn::TaskGrad;
use crate::Scalar;

/// One utterance's true score with its pooled and frame predictions for one task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskTerms<T> {
    pub target: T,
    pub score: T,
    pub frames: Vec<T>,
}

impl<T: Scalar> TaskTerms<T> {
    fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(TrainError::NoFrames);
        }
        for v in std::iter::once(&self.target).chain(std::iter::once(&self.score)).chain(&self.frames) {
            if !(*v >= T::zero() && *v <= T::one()) {
                return Err(TrainError::ScoreRange(v.as_f64()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossTerms<T> {
    pub quality: Vec<TaskTerms<T>>,
    pub intelligibility: Vec<TaskTerms<T>>,
    pub alpha: T,
    pub beta: T,
}

/// Bracketed term for one utterance, before the 1/N average.
pub fn utterance_task_loss<T: Scalar>(terms: &TaskTerms<T>) -> T {
    let utt = (terms.target - terms.score).powi(2);
    let frames = terms.frames.iter().map(|&q| (terms.target - q).powi(2)).sum::<T>()
        / T::from_usize_lossy(terms.frames.len());
    utt + frames
}

pub fn task_loss<T: Scalar>(batch: &[TaskTerms<T>]) -> Result<T> {
    if batch.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    let mut total = T::zero();
    for terms in batch {
        terms.validate()?;
        total += utterance_task_loss(terms);
    }
    Ok(total / T::from_usize_lossy(batch.len()))
}

pub fn quality_loss<T: Scalar>(batch: &LossTerms<T>) -> Result<T> {
    task_loss(&batch.quality)
}

pub fn intelligibility_loss<T: Scalar>(batch: &LossTerms<T>) -> Result<T> {
    task_loss(&batch.intelligibility)
}

/// `α·L_Q + β·L_I` in multi-task mode, the single task's loss otherwise.
pub fn total_loss<T: Scalar>(batch: &LossTerms<T>, mode: TrainMode) -> Result<T> {
    match mode {
        TrainMode::Multitask => Ok(batch.alpha * quality_loss(batch)? + batch.beta * intelligibility_loss(batch)?),
        TrainMode::QualityOnly => quality_loss(batch),
        TrainMode::IntelligibilityOnly => intelligibility_loss(batch),
    }
}

/// Gradient of `weight · (1/batch_len) · utterance_task_loss(terms)` w.r.t. the
/// pooled score and each frame score.
pub fn task_loss_grad<T: Scalar>(terms: &TaskTerms<T>, batch_len: usize, weight: T) -> TaskGrad<T> {
    let two = T::lit(2.0);
    let per = weight / T::from_usize_lossy(batch_len);
    let frames = T::from_usize_lossy(terms.frames.len());
    TaskGrad {
        d_score: per * two * (terms.score - terms.target),
        d_frames: terms.frames.iter().map(|&q| per * two * (q - terms.target) / frames).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn terms(target: f64, score: f64, frames: &[f64]) -> TaskTerms<f64> {
        TaskTerms { target, score, frames: frames.to_vec() }
    }

    fn batch(q: Vec<TaskTerms<f64>>, i: Vec<TaskTerms<f64>>) -> LossTerms<f64> {
        LossTerms { quality: q, intelligibility: i, alpha: 1.0, beta: 1.5 }
    }

    #[test]
    fn exact_fit_is_zero() {
        let b = batch(vec![terms(0.5, 0.5, &[0.5, 0.5])], vec![terms(0.5, 0.5, &[0.5])]);
        assert_eq!(quality_loss(&b).unwrap(), 0.0);
        assert_eq!(intelligibility_loss(&b).unwrap(), 0.0);
        assert_eq!(total_loss(&b, TrainMode::Multitask).unwrap(), 0.0);
    }

    #[test]
    fn hand_evaluated_example() {
        let b = batch(vec![terms(1.0, 0.5, &[1.0, 0.0])], vec![terms(1.0, 0.5, &[1.0, 0.0])]);
        assert!((quality_loss(&b).unwrap() - 0.75).abs() < 1e-15);
        assert!((intelligibility_loss(&b).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn frame_order_and_task_swap() {
        let a = batch(vec![terms(0.7, 0.4, &[0.1, 0.9, 0.3])], vec![terms(0.2, 0.6, &[0.5])]);
        let b = batch(vec![terms(0.7, 0.4, &[0.9, 0.3, 0.1])], vec![terms(0.2, 0.6, &[0.5])]);
        assert_eq!(quality_loss(&a).unwrap(), quality_loss(&b).unwrap());
        let swapped = LossTerms { quality: a.intelligibility.clone(), intelligibility: a.quality.clone(), ..a.clone() };
        assert_eq!(quality_loss(&swapped).unwrap(), intelligibility_loss(&a).unwrap());
        assert_eq!(intelligibility_loss(&swapped).unwrap(), quality_loss(&a).unwrap());
    }

    #[test]
    fn weighted_total() {
        let b = batch(vec![terms(0.0, 0.0, &[0.0])], vec![terms(0.0, 0.0, &[0.0])]);
        assert_eq!(total_loss(&b, TrainMode::Multitask).unwrap(), 0.0);
        let q = terms(0.0, (0.1f64).sqrt(), &[(0.1f64).sqrt()]);
        let i = terms(0.0, (0.2f64).sqrt(), &[(0.2f64).sqrt()]);
        let b = batch(vec![q], vec![i]);
        let (lq, li) = (quality_loss(&b).unwrap(), intelligibility_loss(&b).unwrap());
        assert!((lq - 0.2).abs() < 1e-15 && (li - 0.4).abs() < 1e-15);
        assert!((total_loss(&b, TrainMode::Multitask).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(total_loss(&b, TrainMode::QualityOnly).unwrap(), lq);
        let b3 = LossTerms { beta: 3.0, ..b.clone() };
        assert!((total_loss(&b3, TrainMode::Multitask).unwrap() - (lq + 3.0 * li)).abs() < 1e-15);
    }

    #[test]
    fn invalid_batches() {
        assert!(matches!(task_loss::<f64>(&[]), Err(TrainError::EmptyBatch)));
        assert!(matches!(task_loss(&[terms(1.2, 0.5, &[0.5])]), Err(TrainError::ScoreRange(_))));
        assert!(matches!(task_loss(&[terms(0.2, 0.5, &[])]), Err(TrainError::NoFrames)));
    }

    #[test]
    fn gradient_matches_difference_quotient() {
        let t = terms(0.8, 0.3, &[0.2, 0.6, 0.4]);
        let g = task_loss_grad(&t, 2, 1.5);
        let f = |t: &TaskTerms<f64>| 1.5 * utterance_task_loss(t) / 2.0;
        let h = 1e-6;
        let mut up = t.clone();
        up.score += h;
        let mut down = t.clone();
        down.score -= h;
        assert!(((f(&up) - f(&down)) / (2.0 * h) - g.d_score).abs() < 1e-9);
        for k in 0..3 {
            let (mut up, mut down) = (t.clone(), t.clone());
            up.frames[k] += h;
            down.frames[k] -= h;
            assert!(((f(&up) - f(&down)) / (2.0 * h) - g.d_frames[k]).abs() < 1e-9);
        }
    }
}
