//! Multi-head scaled dot-product self-attention.
//!
//! Head `h` owns columns `[h·d, (h+1)·d)` of the query/key/value projections,
//! `d = dim / heads`. Head outputs are concatenated and mixed by `w_output`.

use rand::Rng;

use super::tensor::{axpy, dot, Tensor2};
use super::{glorot, NnError, Result};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights<T> {
    pub w_query: Tensor2<T>,
    pub w_key: Tensor2<T>,
    pub w_value: Tensor2<T>,
    pub w_output: Tensor2<T>,
}

impl<T: Scalar> AttentionWeights<T> {
    pub fn zeros(dim: usize) -> Self {
        let z = || Tensor2::zeros(dim, dim);
        Self { w_query: z(), w_key: z(), w_value: z(), w_output: z() }
    }

    pub fn init<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self {
            w_query: glorot(dim, dim, rng),
            w_key: glorot(dim, dim, rng),
            w_value: glorot(dim, dim, rng),
            w_output: glorot(dim, dim, rng),
        }
    }

    pub fn dim(&self) -> usize {
        self.w_query.rows()
    }
}

#[derive(Debug)]
pub struct AttentionTrace<T> {
    input: Tensor2<T>,
    query: Tensor2<T>,
    key: Tensor2<T>,
    value: Tensor2<T>,
    /// per-head `T × T` row-stochastic matrices
    probs: Vec<Tensor2<T>>,
    concat: Tensor2<T>,
    heads: usize,
}

impl<T: Scalar> AttentionTrace<T> {
    pub fn weights(&self) -> &[Tensor2<T>] {
        &self.probs
    }
}

fn softmax_rows_in_place<T: Scalar>(m: &mut Tensor2<T>) {
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut total = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
}

pub fn multihead_self_attention<T: Scalar>(
    x: &Tensor2<T>,
    w: &AttentionWeights<T>,
    heads: usize,
) -> Result<(Tensor2<T>, AttentionTrace<T>)> {
    let dim = w.dim();
    if heads == 0 || dim % heads != 0 {
        return Err(NnError::Shape(format!("{heads} heads do not divide attention dim {dim}")));
    }
    if x.cols() != dim {
        return Err(NnError::Shape(format!("attention input has {} columns, expected {dim}", x.cols())));
    }
    let d = dim / heads;
    let steps = x.rows();
    let scale = T::one() / T::from_usize_lossy(d).sqrt();
    let query = x.matmul(&w.w_query);
    let key = x.matmul(&w.w_key);
    let value = x.matmul(&w.w_value);
    let mut concat = Tensor2::zeros(steps, dim);
    let mut probs = Vec::with_capacity(heads);
    for h in 0..heads {
        let cols = h * d..(h + 1) * d;
        let mut p = Tensor2::from_fn(steps, steps, |i, j| {
            dot(&query.row(i)[cols.clone()], &key.row(j)[cols.clone()]) * scale
        });
        softmax_rows_in_place(&mut p);
        for i in 0..steps {
            let out = &mut concat.row_mut(i)[cols.clone()];
            for j in 0..steps {
                axpy(out, p.get(i, j), &value.row(j)[cols.clone()]);
            }
        }
        probs.push(p);
    }
    let y = concat.matmul(&w.w_output);
    Ok((y, AttentionTrace { input: x.clone(), query, key, value, probs, concat, heads }))
}

/// Returns parameter gradients and the gradient w.r.t. the attention input.
pub fn attention_backward<T: Scalar>(
    w: &AttentionWeights<T>,
    trace: AttentionTrace<T>,
    d_y: &Tensor2<T>,
) -> (AttentionWeights<T>, Tensor2<T>) {
    let dim = w.dim();
    let steps = trace.input.rows();
    let d = dim / trace.heads;
    let scale = T::one() / T::from_usize_lossy(d).sqrt();

    let mut grads = AttentionWeights::zeros(dim);
    trace.concat.add_matmul_tn_into(d_y, &mut grads.w_output);
    let d_concat = d_y.matmul_nt(&w.w_output);

    let mut d_query = Tensor2::zeros(steps, dim);
    let mut d_key = Tensor2::zeros(steps, dim);
    let mut d_value = Tensor2::zeros(steps, dim);
    for (h, p) in trace.probs.iter().enumerate() {
        let cols = h * d..(h + 1) * d;
        for i in 0..steps {
            let d_oi = &d_concat.row(i)[cols.clone()];
            // dP_ij = <dO_i, V_j>, then the softmax Jacobian
            let d_p: Vec<T> = (0..steps).map(|j| dot(d_oi, &trace.value.row(j)[cols.clone()])).collect();
            let weighted: T = (0..steps).map(|j| p.get(i, j) * d_p[j]).sum();
            for j in 0..steps {
                let pij = p.get(i, j);
                axpy(&mut d_value.row_mut(j)[cols.clone()], pij, d_oi);
                let d_s = pij * (d_p[j] - weighted) * scale;
                if d_s != T::zero() {
                    axpy(&mut d_query.row_mut(i)[cols.clone()], d_s, &trace.key.row(j)[cols.clone()]);
                    axpy(&mut d_key.row_mut(j)[cols.clone()], d_s, &trace.query.row(i)[cols.clone()]);
                }
            }
        }
    }
    trace.input.add_matmul_tn_into(&d_query, &mut grads.w_query);
    trace.input.add_matmul_tn_into(&d_key, &mut grads.w_key);
    trace.input.add_matmul_tn_into(&d_value, &mut grads.w_value);
    let mut d_x = d_query.matmul_nt(&w.w_query);
    d_x.add_assign(&d_key.matmul_nt(&w.w_key));
    d_x.add_assign(&d_value.matmul_nt(&w.w_value));
    (grads, d_x)
}
