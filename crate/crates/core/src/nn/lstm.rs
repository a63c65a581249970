//! Bidirectional LSTM with backpropagation through time.
//!
//! Gate columns are laid out `[input | forget | cell | output]`, each `hidden` wide.

use rand::Rng;

use super::tensor::{axpy, dot, Tensor2};
use super::{NnError, Result};
use crate::{sigmoid, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmWeights<T> {
    /// `input_dim × 4·hidden`
    pub w_input: Tensor2<T>,
    /// `hidden × 4·hidden`
    pub w_hidden: Tensor2<T>,
    /// `1 × 4·hidden`
    pub bias: Tensor2<T>,
}

impl<T: Scalar> LstmWeights<T> {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            w_input: Tensor2::zeros(input_dim, 4 * hidden),
            w_hidden: Tensor2::zeros(hidden, 4 * hidden),
            bias: Tensor2::zeros(1, 4 * hidden),
        }
    }

    /// Uniform(±1/√hidden) weights and biases, forget-gate bias shifted to +1.
    pub fn init<R: Rng + ?Sized>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut draw = |r, c| Tensor2::from_fn(r, c, |_, _| T::lit(rng.gen_range(-bound..bound)));
        let w_input = draw(input_dim, 4 * hidden);
        let w_hidden = draw(hidden, 4 * hidden);
        let mut bias = draw(1, 4 * hidden);
        for j in hidden..2 * hidden {
            bias.set(0, j, T::lit(1.0));
        }
        Self { w_input, w_hidden, bias }
    }

    pub fn hidden(&self) -> usize {
        self.w_hidden.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_input.rows()
    }
}

/// Activations of one direction, stored in processing order.
#[derive(Debug)]
pub struct DirectionTrace<T> {
    reverse: bool,
    /// activated gates `[i f g o]` per step
    gates: Tensor2<T>,
    cells: Tensor2<T>,
    tanh_cells: Tensor2<T>,
    hidden: Tensor2<T>,
}

#[derive(Debug)]
pub struct BlstmTrace<T> {
    input: Tensor2<T>,
    forward: DirectionTrace<T>,
    backward: DirectionTrace<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlstmWeights<T> {
    pub forward: LstmWeights<T>,
    pub backward: LstmWeights<T>,
}

#[inline]
fn time_index(step: usize, len: usize, reverse: bool) -> usize {
    if reverse {
        len - 1 - step
    } else {
        step
    }
}

fn run_direction<T: Scalar>(x: &Tensor2<T>, w: &LstmWeights<T>, reverse: bool) -> (Tensor2<T>, DirectionTrace<T>) {
    let steps = x.rows();
    let h = w.hidden();
    let mut pre = x.matmul(&w.w_input);
    pre.add_row_in_place(&w.bias);

    let mut gates = Tensor2::zeros(steps, 4 * h);
    let mut cells = Tensor2::zeros(steps, h);
    let mut tanh_cells = Tensor2::zeros(steps, h);
    let mut hidden = Tensor2::zeros(steps, h);
    let mut out = Tensor2::zeros(steps, h);
    let mut z = vec![T::zero(); 4 * h];
    let mut h_prev = vec![T::zero(); h];
    let mut c_prev = vec![T::zero(); h];

    for s in 0..steps {
        let t = time_index(s, steps, reverse);
        z.copy_from_slice(pre.row(t));
        for (k, &hk) in h_prev.iter().enumerate() {
            if hk != T::zero() {
                axpy(&mut z, hk, w.w_hidden.row(k));
            }
        }
        let g = gates.row_mut(s);
        for j in 0..h {
            g[j] = sigmoid(z[j]);
            g[h + j] = sigmoid(z[h + j]);
            g[2 * h + j] = z[2 * h + j].tanh();
            g[3 * h + j] = sigmoid(z[3 * h + j]);
        }
        for j in 0..h {
            let c = g[h + j] * c_prev[j] + g[j] * g[2 * h + j];
            let tc = c.tanh();
            let hv = g[3 * h + j] * tc;
            c_prev[j] = c;
            h_prev[j] = hv;
            cells.set(s, j, c);
            tanh_cells.set(s, j, tc);
            hidden.set(s, j, hv);
            out.set(t, j, hv);
        }
    }
    (out, DirectionTrace { reverse, gates, cells, tanh_cells, hidden })
}

/// Runs both directions; row `t` of the output is `[h_fwd(t), h_bwd(t)]`.
pub fn blstm_forward<T: Scalar>(x: &Tensor2<T>, w: &BlstmWeights<T>) -> Result<(Tensor2<T>, BlstmTrace<T>)> {
    if x.cols() != w.forward.input_dim() {
        return Err(NnError::Shape(format!("input has {} columns, BLSTM expects {}", x.cols(), w.forward.input_dim())));
    }
    if x.rows() == 0 {
        return Err(NnError::Shape("empty sequence".into()));
    }
    let (hf, tf) = run_direction(x, &w.forward, false);
    let (hb, tb) = run_direction(x, &w.backward, true);
    if !(hf.all_finite() && hb.all_finite()) {
        return Err(NnError::NumericalBlowup("blstm"));
    }
    let hid = hf.cols();
    let out = Tensor2::from_fn(x.rows(), 2 * hid, |t, j| if j < hid { hf.get(t, j) } else { hb.get(t, j - hid) });
    Ok((out, BlstmTrace { input: x.clone(), forward: tf, backward: tb }))
}

fn backprop_direction<T: Scalar>(
    x: &Tensor2<T>,
    w: &LstmWeights<T>,
    tr: &DirectionTrace<T>,
    d_out: impl Fn(usize, usize) -> T,
) -> LstmWeights<T> {
    let steps = x.rows();
    let h = w.hidden();
    let mut grads = LstmWeights::zeros(w.input_dim(), h);
    let mut dz_all = Tensor2::zeros(steps, 4 * h);
    let mut dh_next = vec![T::zero(); h];
    let mut dc_next = vec![T::zero(); h];
    let one = T::one();

    for s in (0..steps).rev() {
        let t = time_index(s, steps, tr.reverse);
        let g = tr.gates.row(s);
        let dz = dz_all.row_mut(t);
        for j in 0..h {
            let (i, f, gg, o) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
            let tc = tr.tanh_cells.get(s, j);
            let c_prev = if s > 0 { tr.cells.get(s - 1, j) } else { T::zero() };
            let dh = d_out(t, j) + dh_next[j];
            let d_o = dh * tc;
            let dc = dc_next[j] + dh * o * (one - tc * tc);
            dz[j] = dc * gg * i * (one - i);
            dz[h + j] = dc * c_prev * f * (one - f);
            dz[2 * h + j] = dc * i * (one - gg * gg);
            dz[3 * h + j] = d_o * o * (one - o);
            dc_next[j] = dc * f;
        }
        let dz = dz_all.row(t);
        if s > 0 {
            let h_prev = tr.hidden.row(s - 1);
            for (k, &hk) in h_prev.iter().enumerate() {
                axpy(grads.w_hidden.row_mut(k), hk, dz);
            }
        }
        for (k, slot) in dh_next.iter_mut().enumerate() {
            *slot = dot(dz, w.w_hidden.row(k));
        }
    }
    x.add_matmul_tn_into(&dz_all, &mut grads.w_input);
    grads.bias = dz_all.col_sums();
    grads
}

/// Parameter gradients given `d_out` (`T × 2·hidden`), the loss gradient w.r.t. the BLSTM output.
pub fn blstm_backward<T: Scalar>(w: &BlstmWeights<T>, trace: BlstmTrace<T>, d_out: &Tensor2<T>) -> BlstmWeights<T> {
    let h = w.forward.hidden();
    assert_eq!(d_out.shape(), (trace.input.rows(), 2 * h), "blstm gradient shape");
    BlstmWeights {
        forward: backprop_direction(&trace.input, &w.forward, &trace.forward, |t, j| d_out.get(t, j)),
        backward: backprop_direction(&trace.input, &w.backward, &trace.backward, |t, j| d_out.get(t, h + j)),
    }
}
