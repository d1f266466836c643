use serde::{Deserialize, Serialize};

use super::{Parameter, Tensor2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(Self::Sgd),
            "adam" => Ok(Self::Adam),
            other => Err(format!("unknown optimizer `{other}` (expected sgd|adam)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Optimizer with its per-parameter state. Parameters must be passed to
/// [`Optimizer::step`] in the same order on every call.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    hyper: AdamHyper,
    step_count: u64,
    moments: Vec<(Tensor2, Tensor2)>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Self {
        assert!(learning_rate > 0.0, "learning rate must be positive");
        Self {
            kind,
            learning_rate,
            hyper: AdamHyper::default(),
            step_count: 0,
            moments: Vec::new(),
        }
    }

    pub fn sgd(learning_rate: f64) -> Self {
        Self::new(OptimizerKind::Sgd, learning_rate)
    }

    pub fn adam(learning_rate: f64) -> Self {
        Self::new(OptimizerKind::Adam, learning_rate)
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Applies one update from the accumulated gradients, then zeroes them.
    pub fn step(&mut self, params: &mut [&mut Parameter]) {
        self.step_count += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for p in params.iter_mut() {
                    let lr = self.learning_rate;
                    for (v, g) in p.value.as_mut_slice().iter_mut().zip(p.grad.as_slice()) {
                        *v -= lr * g;
                    }
                }
            }
            OptimizerKind::Adam => {
                if self.moments.is_empty() {
                    self.moments = params
                        .iter()
                        .map(|p| {
                            let (r, c) = p.value.shape();
                            (Tensor2::zeros(r, c), Tensor2::zeros(r, c))
                        })
                        .collect();
                }
                assert_eq!(
                    self.moments.len(),
                    params.len(),
                    "parameter list changed between steps"
                );
                let AdamHyper {
                    beta1,
                    beta2,
                    epsilon,
                } = self.hyper;
                let t = self.step_count as i32;
                let bias1 = 1.0 - beta1.powi(t);
                let bias2 = 1.0 - beta2.powi(t);
                let step_size = self.learning_rate / bias1;
                for (p, (m, v)) in params.iter_mut().zip(self.moments.iter_mut()) {
                    assert_eq!(
                        m.shape(),
                        p.value.shape(),
                        "moment shape mismatch for {}",
                        p.name
                    );
                    let values = p.value.as_mut_slice();
                    let grads = p.grad.as_slice();
                    for (((x, &g), m), v) in values
                        .iter_mut()
                        .zip(grads)
                        .zip(m.as_mut_slice())
                        .zip(v.as_mut_slice())
                    {
                        *m = beta1 * *m + (1.0 - beta1) * g;
                        *v = beta2 * *v + (1.0 - beta2) * g * g;
                        *x -= step_size * *m / ((*v / bias2).sqrt() + epsilon);
                    }
                }
            }
        }
        for p in params.iter_mut() {
            p.zero_grad();
        }
    }
}
