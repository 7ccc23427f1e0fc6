//! Minimal neural primitives: tensors, an LSTM cell with backpropagation
//! through time, a dense layer, a 1-D convolution and Adam. Everything is
//! plain f64 on the CPU; forward passes are deterministic and every backward
//! pass is exact reverse-mode differentiation of its forward counterpart
//! (checked against central finite differences in the test suite).

mod adam;
mod conv1d;
mod dense;
mod lstm;
mod tensor;

pub use adam::{adam_update, AdamHyperParams, AdamState};
pub use conv1d::{conv1d_backward, conv1d_forward, Conv1dCache, Conv1dParams};
pub use dense::{dense_backward, dense_forward, DenseParams};
pub use lstm::{
    lstm_backward, lstm_cell_forward, lstm_sequence_forward, GateParams, LstmCellParams,
    LstmSequenceRun, LstmStepCache, LstmStepState, SequenceGrad,
};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NeuralError {
    #[error("shape mismatch in {context}: expected {expected} values, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite activation produced by {context}")]
    NonFiniteActivation { context: &'static str },
    #[error("backward cache does not match the forward pass ({context})")]
    CacheMismatch { context: &'static str },
    #[error("input of {timesteps} steps is shorter than the kernel width {kernel_width}")]
    WindowTooSmall {
        timesteps: usize,
        kernel_width: usize,
    },
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Glorot / scaled-uniform initialization: uniform in ±sqrt(6 / (fan_in + fan_out)).
pub fn init_scaled_uniform(tensor: &mut Tensor, fan_in: usize, fan_out: usize, rng: &mut crate::rng::Rng) {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in tensor.values_mut() {
        *v = rng.uniform_in(-bound, bound);
    }
}
