use crate::nn::Tensor2;

use super::lstm::{lstm_backward, lstm_forward, LstmParams, LstmTrace};
use super::ModelError;

/// BiLSTM outputs for one entity.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedEntity {
    /// `h_i = [h_Li ; h_Ri]`, one row per triple (`n × 2h`).
    pub h: Tensor2,
    /// Summary query `[h_Ln ; h_R1]`: the last state of each chain.
    pub h_s: Vec<f64>,
}

/// Forward pass state kept for backpropagation.
#[derive(Debug, Clone)]
pub struct BiLstmTrace {
    pub forward: LstmTrace,
    /// Trace of the backward chain in its own (reversed) processing order.
    pub backward: LstmTrace,
    pub reversed_inputs: Tensor2,
}

fn reverse_rows(m: &Tensor2) -> Tensor2 {
    let n = m.rows();
    let mut out = Tensor2::zeros(n, m.cols());
    for r in 0..n {
        out.row_mut(r).copy_from_slice(m.row(n - 1 - r));
    }
    out
}

/// Encodes `xs` (`n × d_in`, triple order) with a left-to-right and a
/// right-to-left chain, both starting from zero state.
pub fn bilstm_encode(
    xs: &Tensor2,
    forward: &LstmParams,
    backward: &LstmParams,
) -> Result<(EncodedEntity, BiLstmTrace), ModelError> {
    let n = xs.rows();
    if n == 0 {
        return Err(ModelError::EmptyEntity);
    }
    if xs.cols() != forward.input() || xs.cols() != backward.input() {
        return Err(ModelError::DimensionMismatch(format!(
            "input width {} vs lstm inputs {}/{}",
            xs.cols(),
            forward.input(),
            backward.input()
        )));
    }
    let hidden = forward.hidden();
    let fwd = lstm_forward(xs, forward);
    let reversed_inputs = reverse_rows(xs);
    let bwd = lstm_forward(&reversed_inputs, backward);
    let mut h = Tensor2::zeros(n, 2 * hidden);
    for i in 0..n {
        let row = h.row_mut(i);
        row[..hidden].copy_from_slice(fwd.h.row(i));
        row[hidden..].copy_from_slice(bwd.h.row(n - 1 - i));
    }
    let mut h_s = Vec::with_capacity(2 * hidden);
    h_s.extend_from_slice(fwd.h.row(n - 1));
    h_s.extend_from_slice(bwd.h.row(n - 1));
    Ok((
        EncodedEntity { h, h_s },
        BiLstmTrace {
            forward: fwd,
            backward: bwd,
            reversed_inputs,
        },
    ))
}

/// Backpropagates gradients w.r.t. every `h_i` (`n × 2h`) and `h_s`.
/// Returns the gradient w.r.t. the inputs in triple order.
pub fn bilstm_backward(
    xs: &Tensor2,
    trace: &BiLstmTrace,
    dh: &Tensor2,
    dh_s: &[f64],
    forward: &mut LstmParams,
    backward: &mut LstmParams,
) -> Tensor2 {
    let n = xs.rows();
    let hidden = forward.hidden();
    let mut d_fwd = Tensor2::zeros(n, hidden);
    // backward chain gradients in its processing order
    let mut d_bwd = Tensor2::zeros(n, hidden);
    for i in 0..n {
        d_fwd.row_mut(i).copy_from_slice(&dh.row(i)[..hidden]);
        d_bwd
            .row_mut(n - 1 - i)
            .copy_from_slice(&dh.row(i)[hidden..]);
    }
    for j in 0..hidden {
        let v = d_fwd.get(n - 1, j) + dh_s[j];
        d_fwd.set(n - 1, j, v);
        let v = d_bwd.get(n - 1, j) + dh_s[hidden + j];
        d_bwd.set(n - 1, j, v);
    }
    let mut dx = lstm_backward(xs, &trace.forward, &d_fwd, forward);
    let dx_rev = lstm_backward(&trace.reversed_inputs, &trace.backward, &d_bwd, backward);
    for i in 0..n {
        for (a, b) in dx.row_mut(i).iter_mut().zip(dx_rev.row(n - 1 - i)) {
            *a += b;
        }
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::super::lstm::lstm_cell;
    use super::*;
    use crate::nn::Rng;

    #[test]
    fn single_step_query_equals_output() {
        let mut rng = Rng::new(1);
        let f = LstmParams::new("f", 3, 2, 0.5, &mut rng);
        let b = LstmParams::new("b", 3, 2, 0.5, &mut rng);
        let xs = Tensor2::uniform(1, 3, 1.0, &mut rng);
        let (enc, _) = bilstm_encode(&xs, &f, &b).unwrap();
        assert_eq!(enc.h.cols(), 4);
        assert_eq!(enc.h_s, enc.h.row(0).to_vec());
    }

    #[test]
    fn empty_entity_errors() {
        let p = LstmParams::zeros("p", 2, 2);
        assert!(matches!(
            bilstm_encode(&Tensor2::zeros(0, 2), &p, &p),
            Err(ModelError::EmptyEntity)
        ));
    }

    #[test]
    fn reversal_mirrors_halves_with_tied_parameters() {
        let mut rng = Rng::new(2);
        let p = LstmParams::new("p", 3, 2, 0.7, &mut rng);
        let xs = Tensor2::uniform(4, 3, 1.0, &mut rng);
        let (a, _) = bilstm_encode(&xs, &p, &p).unwrap();
        let (b, _) = bilstm_encode(&reverse_rows(&xs), &p, &p).unwrap();
        for i in 0..4 {
            assert_eq!(&b.h.row(i)[..2], &a.h.row(3 - i)[2..]);
            assert_eq!(&b.h.row(i)[2..], &a.h.row(3 - i)[..2]);
        }
    }

    #[test]
    fn three_step_oracle() {
        let mut rng = Rng::new(3);
        let f = LstmParams::new("f", 2, 2, 0.9, &mut rng);
        let b = LstmParams::new("b", 2, 2, 0.9, &mut rng);
        let xs = Tensor2::uniform(3, 2, 1.0, &mut rng);
        let (enc, _) = bilstm_encode(&xs, &f, &b).unwrap();
        // step-by-step with the single-cell op
        let mut left = Vec::new();
        let (mut h, mut c) = (vec![0.0; 2], vec![0.0; 2]);
        for t in 0..3 {
            let (hn, cn) = lstm_cell(xs.row(t), &h, &c, &f).unwrap();
            left.push(hn.clone());
            h = hn;
            c = cn;
        }
        let mut right = vec![Vec::new(); 3];
        let (mut h, mut c) = (vec![0.0; 2], vec![0.0; 2]);
        for t in (0..3).rev() {
            let (hn, cn) = lstm_cell(xs.row(t), &h, &c, &b).unwrap();
            right[t] = hn.clone();
            h = hn;
            c = cn;
        }
        for i in 0..3 {
            for j in 0..2 {
                assert!((enc.h.get(i, j) - left[i][j]).abs() < 1e-12);
                assert!((enc.h.get(i, 2 + j) - right[i][j]).abs() < 1e-12);
            }
        }
        let expect_hs: Vec<f64> = left[2].iter().chain(&right[0]).copied().collect();
        for (a, e) in enc.h_s.iter().zip(&expect_hs) {
            assert!((a - e).abs() < 1e-12);
        }
    }
}
