//! Single-direction LSTM with hand-written backpropagation through time.
//!
//! Gate pre-activations are stacked as `[input; forget; output; candidate]`,
//! so `w` is `4h × d_in`, `u` is `4h × h` and `b` is `1 × 4h`.

use crate::nn::{sigmoid, sigmoid_derivative, tanh, tanh_derivative, Parameter, Rng, Tensor2};

use super::ModelError;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w: Parameter,
    pub u: Parameter,
    pub b: Parameter,
}

impl LstmParams {
    pub fn new(prefix: &str, input: usize, hidden: usize, init_range: f64, rng: &mut Rng) -> Self {
        Self {
            w: Parameter::new(
                format!("{prefix}.w"),
                Tensor2::uniform(4 * hidden, input, init_range, rng),
            ),
            u: Parameter::new(
                format!("{prefix}.u"),
                Tensor2::uniform(4 * hidden, hidden, init_range, rng),
            ),
            b: Parameter::new(
                format!("{prefix}.b"),
                Tensor2::uniform(1, 4 * hidden, init_range, rng),
            ),
        }
    }

    pub fn zeros(prefix: &str, input: usize, hidden: usize) -> Self {
        Self {
            w: Parameter::new(format!("{prefix}.w"), Tensor2::zeros(4 * hidden, input)),
            u: Parameter::new(format!("{prefix}.u"), Tensor2::zeros(4 * hidden, hidden)),
            b: Parameter::new(format!("{prefix}.b"), Tensor2::zeros(1, 4 * hidden)),
        }
    }

    pub fn hidden(&self) -> usize {
        self.u.value.cols()
    }

    pub fn input(&self) -> usize {
        self.w.value.cols()
    }

    pub fn parameters(&self) -> [&Parameter; 3] {
        [&self.w, &self.u, &self.b]
    }

    pub fn parameters_mut(&mut self) -> [&mut Parameter; 3] {
        [&mut self.w, &mut self.u, &mut self.b]
    }

    /// Copies values from another parameter set, keeping this set's names.
    pub fn copy_values_from(&mut self, other: &LstmParams) {
        self.w.value = other.w.value.clone();
        self.u.value = other.u.value.clone();
        self.b.value = other.b.value.clone();
    }
}

/// One LSTM step:
/// `i,f,o = σ(·)`, `g = tanh(·)`, `c = f⊙c_prev + i⊙g`, `h = o⊙tanh(c)`.
pub fn lstm_cell(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    params: &LstmParams,
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    let hidden = params.hidden();
    if x.len() != params.input() || h_prev.len() != hidden || c_prev.len() != hidden {
        return Err(ModelError::DimensionMismatch(format!(
            "lstm_cell: x {} (want {}), h {} / c {} (want {hidden})",
            x.len(),
            params.input(),
            h_prev.len(),
            c_prev.len()
        )));
    }
    let mut z = params.b.value.as_slice().to_vec();
    params.w.value.matvec_acc(x, &mut z);
    params.u.value.matvec_acc(h_prev, &mut z);
    let mut h = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    for j in 0..hidden {
        let i = sigmoid(z[j]);
        let f = sigmoid(z[hidden + j]);
        let o = sigmoid(z[2 * hidden + j]);
        let g = tanh(z[3 * hidden + j]);
        c[j] = f * c_prev[j] + i * g;
        h[j] = o * tanh(c[j]);
    }
    Ok((h, c))
}

/// Activations saved by a forward pass, one row per time step.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    /// Activated gates `[i f o g]`, `n × 4h`.
    pub gates: Tensor2,
    pub c: Tensor2,
    pub h: Tensor2,
}

/// Runs the sequence `xs` (`n × d_in`, in processing order) from zero state.
pub fn lstm_forward(xs: &Tensor2, params: &LstmParams) -> LstmTrace {
    let n = xs.rows();
    let hidden = params.hidden();
    let mut gates = Tensor2::zeros(n, 4 * hidden);
    gates.gemm(xs, false, &params.w.value, true, 0.0);
    let mut c = Tensor2::zeros(n, hidden);
    let mut h = Tensor2::zeros(n, hidden);
    let bias = params.b.value.as_slice();
    let zero = vec![0.0; hidden];
    for t in 0..n {
        let (h_prev, c_prev) = if t == 0 {
            (zero.clone(), zero.clone())
        } else {
            (h.row(t - 1).to_vec(), c.row(t - 1).to_vec())
        };
        let z = gates.row_mut(t);
        for (zi, bi) in z.iter_mut().zip(bias) {
            *zi += bi;
        }
        params.u.value.matvec_acc(&h_prev, z);
        for j in 0..hidden {
            z[j] = sigmoid(z[j]);
            z[hidden + j] = sigmoid(z[hidden + j]);
            z[2 * hidden + j] = sigmoid(z[2 * hidden + j]);
            z[3 * hidden + j] = tanh(z[3 * hidden + j]);
        }
        let z = gates.row(t).to_vec();
        let (c_row, h_row) = (c.row_mut(t), &mut vec![0.0; hidden]);
        for j in 0..hidden {
            c_row[j] = z[hidden + j] * c_prev[j] + z[j] * z[3 * hidden + j];
            h_row[j] = z[2 * hidden + j] * tanh(c_row[j]);
        }
        h.row_mut(t).copy_from_slice(h_row);
    }
    LstmTrace { gates, c, h }
}

/// Backpropagates `dh` (`n × h`, gradient of the loss w.r.t. every output
/// `h_t`) through the trace. Parameter gradients are accumulated into
/// `params`; the gradient w.r.t. the inputs (`n × d_in`) is returned.
pub fn lstm_backward(
    xs: &Tensor2,
    trace: &LstmTrace,
    dh: &Tensor2,
    params: &mut LstmParams,
) -> Tensor2 {
    let n = xs.rows();
    let hidden = params.hidden();
    let mut dz = Tensor2::zeros(n, 4 * hidden);
    let mut dh_next = vec![0.0; hidden];
    let mut dc_next = vec![0.0; hidden];
    for t in (0..n).rev() {
        let g = trace.gates.row(t);
        let c = trace.c.row(t);
        let dz_row = dz.row_mut(t);
        for j in 0..hidden {
            let (i, f, o, cand) = (g[j], g[hidden + j], g[2 * hidden + j], g[3 * hidden + j]);
            let c_prev = if t == 0 { 0.0 } else { trace.c.get(t - 1, j) };
            let dh_total = dh.get(t, j) + dh_next[j];
            let tc = tanh(c[j]);
            let d_o = dh_total * tc;
            let dc = dc_next[j] + dh_total * o * tanh_derivative(tc);
            dz_row[j] = dc * cand * sigmoid_derivative(i);
            dz_row[hidden + j] = dc * c_prev * sigmoid_derivative(f);
            dz_row[2 * hidden + j] = d_o * sigmoid_derivative(o);
            dz_row[3 * hidden + j] = dc * i * tanh_derivative(cand);
            dc_next[j] = dc * f;
        }
        dh_next.iter_mut().for_each(|x| *x = 0.0);
        params.u.value.matvec_t_acc(dz.row(t), &mut dh_next);
    }
    // h_prev rows: zero state, then h_0..h_{n-2}
    let mut h_prev = Tensor2::zeros(n, hidden);
    for t in 1..n {
        h_prev.row_mut(t).copy_from_slice(trace.h.row(t - 1));
    }
    params.w.grad.gemm(&dz, true, xs, false, 1.0);
    params.u.grad.gemm(&dz, true, &h_prev, false, 1.0);
    let db = params.b.grad.as_mut_slice();
    for t in 0..n {
        for (d, z) in db.iter_mut().zip(dz.row(t)) {
            *d += z;
        }
    }
    let mut dx = Tensor2::zeros(n, params.input());
    dx.gemm(&dz, false, &params.w.value, false, 0.0);
    dx
}
