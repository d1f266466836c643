use serde::{Deserialize, Serialize};

use crate::nn::{dot, softmax};

use super::{EncodedEntity, ModelError};

/// Machine attention over an entity's triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionResult {
    pub scores: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl AttentionResult {
    pub fn topk(&self, k: usize) -> Result<Vec<usize>, ModelError> {
        rank_topk(&self.alpha, k)
    }

    /// Every index, by descending alpha.
    pub fn ranking(&self) -> Vec<usize> {
        ranking(&self.alpha)
    }
}

/// `alpha = softmax(h_sᵀ h_i)`
pub fn attention_forward(encoded: &EncodedEntity) -> AttentionResult {
    let scores: Vec<f64> = (0..encoded.h.rows())
        .map(|i| dot(&encoded.h_s, encoded.h.row(i)))
        .collect();
    let alpha = softmax(&scores).expect("encoded entity is non-empty and finite");
    AttentionResult { scores, alpha }
}

/// Indices sorted by descending value; equal values keep ascending index.
pub fn ranking(alpha: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..alpha.len()).collect();
    idx.sort_by(|&a, &b| alpha[b].total_cmp(&alpha[a]).then(a.cmp(&b)));
    idx
}

/// The `k` largest entries of `alpha`, descending, ties by lower index.
pub fn rank_topk(alpha: &[f64], k: usize) -> Result<Vec<usize>, ModelError> {
    if k > alpha.len() {
        return Err(ModelError::KTooLarge { k, n: alpha.len() });
    }
    let mut r = ranking(alpha);
    r.truncate(k);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor2;
    use proptest::prelude::*;

    fn enc(rows: &[[f64; 4]], h_s: [f64; 4]) -> EncodedEntity {
        EncodedEntity {
            h: Tensor2::from_vec(rows.len(), 4, rows.iter().flatten().copied().collect()).unwrap(),
            h_s: h_s.to_vec(),
        }
    }

    #[test]
    fn identical_rows_give_uniform() {
        let a = attention_forward(&enc(&[[0.1, 0.2, 0.3, 0.4]; 3], [1.0, -1.0, 0.5, 0.0]));
        for x in &a.alpha {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn orthogonal_query_gives_uniform() {
        let a = attention_forward(&enc(
            &[[1.0, 0.0, 0.0, 0.0], [0.0, 2.0, 0.0, 0.0]],
            [0.0, 0.0, 1.0, 1.0],
        ));
        assert_eq!(a.scores, vec![0.0, 0.0]);
        assert_eq!(a.alpha, vec![0.5, 0.5]);
    }

    #[test]
    fn matches_dot_softmax_oracle() {
        let rows = [
            [0.1, -0.3, 0.7, 0.2],
            [0.5, 0.5, -0.5, 0.0],
            [-0.2, 0.9, 0.1, -0.4],
        ];
        let hs = [0.3, 0.8, -0.6, 0.25];
        let a = attention_forward(&enc(&rows, hs));
        let s: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().zip(&hs).map(|(x, y)| x * y).sum())
            .collect();
        let z: f64 = s.iter().map(|x| x.exp()).sum();
        for (got, si) in a.alpha.iter().zip(&s) {
            assert!((got - si.exp() / z).abs() < 1e-12);
        }
        assert!((a.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn topk_examples() {
        assert_eq!(rank_topk(&[0.1, 0.5, 0.4], 2).unwrap(), vec![1, 2]);
        assert_eq!(rank_topk(&[0.1, 0.5, 0.4], 3).unwrap(), vec![1, 2, 0]);
        assert_eq!(rank_topk(&[0.25; 4], 2).unwrap(), vec![0, 1]);
        assert_eq!(
            rank_topk(&[0.5, 0.5], 3),
            Err(ModelError::KTooLarge { k: 3, n: 2 })
        );
    }

    proptest! {
        #[test]
        fn ranking_is_a_pure_function_of_values(alpha in prop::collection::vec(0u8..6, 1..30), k in 0usize..30) {
            let alpha: Vec<f64> = alpha.into_iter().map(f64::from).collect();
            prop_assume!(k <= alpha.len());
            let top = rank_topk(&alpha, k).unwrap();
            prop_assert_eq!(top.len(), k);
            for w in top.windows(2) {
                prop_assert!(alpha[w[0]] > alpha[w[1]] || (alpha[w[0]] == alpha[w[1]] && w[0] < w[1]));
            }
            // nothing outside the top-k beats anything inside it
            if let Some(&last) = top.last() {
                for i in (0..alpha.len()).filter(|i| !top.contains(i)) {
                    prop_assert!(alpha[i] < alpha[last] || (alpha[i] == alpha[last] && i > last));
                }
            }
            let full = ranking(&alpha);
            prop_assert_eq!(&full[..k], &top[..]);
        }
    }
}
