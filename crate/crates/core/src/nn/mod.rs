//! Small deterministic numeric kernel: dense `f64` matrices, activations,
//! softmax/cross-entropy, parameters with gradients, optimizers, a seeded
//! RNG and a central-difference gradient checker.
//!
//! Gradients are derived by hand for each consumer; there is no general
//! autodiff graph here.

mod activation;
mod gradcheck;
mod loss;
mod optim;
mod rng;
mod tensor;

pub use activation::{sigmoid, sigmoid_derivative, tanh, tanh_derivative};
pub use gradcheck::{finite_diff_check, CoordinateSample, GradCheckReport, ParameterSet};
pub use loss::{cross_entropy, entropy, softmax, softmax_in_place};
pub use optim::{AdamHyper, Optimizer, OptimizerKind};
pub use rng::Rng;
pub use tensor::{dot, Parameter, Tensor2};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("non-positive prediction {value} at index {index}")]
    NonPositivePrediction { index: usize, value: f64 },
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
}
