//! The four forecasting architectures assembled from the neural primitives,
//! plus training, one-step-ahead prediction and model persistence.
//!
//! Every architecture maps a window of scaled close prices to the next-day
//! scaled price through a single regression output:
//!
//! * single LSTM:        LSTM(units) -> Dense(1)
//! * stacked LSTM:       LSTM(units1, per-step) -> LSTM(units2) -> Dense(1)
//! * bidirectional LSTM: LSTM(units) forward || LSTM(units) over the reversed
//!   window, final hidden states concatenated -> Dense(1)
//! * CNN-LSTM:           Conv1d(filters, kernel) + ReLU -> LSTM(units) -> Dense(1)

mod persist;
mod train;

pub use persist::{load, save};
pub use train::train;

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::neural::{
    conv1d_backward, conv1d_forward, dense_backward, dense_forward, init_scaled_uniform,
    lstm_backward, lstm_sequence_forward, Conv1dCache, Conv1dParams, DenseParams, LstmCellParams,
    LstmSequenceRun, LstmStepState, NeuralError, SequenceGrad, Tensor,
};
use crate::preprocess::{inverse_transform, ScalingParams};
use crate::rng::Rng;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("dataset has no samples")]
    EmptyDataset,
    #[error("dataset window {dataset} does not match the model window {model}")]
    WindowMismatch { dataset: usize, model: usize },
    #[error("training diverged to a non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("index {index} needs {window} prior values ({available} available)")]
    InsufficientContext {
        index: usize,
        window: usize,
        available: usize,
    },
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt model file: {0}")]
    CorruptFile(String),
    #[error("model file i/o failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Architecture family and its width parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelVariant {
    SingleLstm { units: usize },
    DualLstm { units1: usize, units2: usize },
    BiLstm { units: usize },
    CnnLstm { filters: usize, kernel_width: usize, units: usize },
}

impl ModelVariant {
    pub fn name(&self) -> &'static str {
        match self {
            ModelVariant::SingleLstm { .. } => "single-lstm",
            ModelVariant::DualLstm { .. } => "dual-lstm",
            ModelVariant::BiLstm { .. } => "bi-lstm",
            ModelVariant::CnnLstm { .. } => "cnn-lstm",
        }
    }
}

/// Architecture plus the input window length (timesteps of history per sample).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: ModelVariant,
    pub window: usize,
}

pub const DEFAULT_UNITS: usize = 64;
pub const DEFAULT_WINDOW: usize = 3;
pub const DEFAULT_FILTERS: usize = 64;
pub const DEFAULT_KERNEL_WIDTH: usize = 2;

impl ModelSpec {
    pub fn single_lstm() -> ModelSpec {
        ModelSpec {
            variant: ModelVariant::SingleLstm {
                units: DEFAULT_UNITS,
            },
            window: DEFAULT_WINDOW,
        }
    }

    pub fn dual_lstm() -> ModelSpec {
        ModelSpec {
            variant: ModelVariant::DualLstm {
                units1: DEFAULT_UNITS,
                units2: DEFAULT_UNITS,
            },
            window: DEFAULT_WINDOW,
        }
    }

    pub fn bi_lstm() -> ModelSpec {
        ModelSpec {
            variant: ModelVariant::BiLstm {
                units: DEFAULT_UNITS,
            },
            window: DEFAULT_WINDOW,
        }
    }

    pub fn cnn_lstm() -> ModelSpec {
        ModelSpec {
            variant: ModelVariant::CnnLstm {
                filters: DEFAULT_FILTERS,
                kernel_width: DEFAULT_KERNEL_WIDTH,
                units: DEFAULT_UNITS,
            },
            window: DEFAULT_WINDOW,
        }
    }

    /// All four architectures at their default widths.
    pub fn all_defaults() -> Vec<ModelSpec> {
        vec![
            Self::single_lstm(),
            Self::dual_lstm(),
            Self::bi_lstm(),
            Self::cnn_lstm(),
        ]
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.window < 1 {
            return Err(ModelError::InvalidSpec("window must be >= 1".to_string()));
        }
        let positive = |value: usize, what: &str| {
            if value == 0 {
                Err(ModelError::InvalidSpec(format!("{what} must be >= 1")))
            } else {
                Ok(())
            }
        };
        match self.variant {
            ModelVariant::SingleLstm { units } | ModelVariant::BiLstm { units } => {
                positive(units, "units")
            }
            ModelVariant::DualLstm { units1, units2 } => {
                positive(units1, "units1")?;
                positive(units2, "units2")
            }
            ModelVariant::CnnLstm {
                filters,
                kernel_width,
                units,
            } => {
                positive(filters, "filters")?;
                positive(kernel_width, "kernel width")?;
                positive(units, "units")?;
                if self.window < kernel_width {
                    return Err(ModelError::InvalidSpec(format!(
                        "window {} is shorter than the kernel width {kernel_width}",
                        self.window
                    )));
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.variant {
            ModelVariant::SingleLstm { units } => write!(f, "single-lstm({units})"),
            ModelVariant::DualLstm { units1, units2 } => {
                write!(f, "dual-lstm({units1},{units2})")
            }
            ModelVariant::BiLstm { units } => write!(f, "bi-lstm({units})"),
            ModelVariant::CnnLstm {
                filters,
                kernel_width,
                units,
            } => write!(f, "cnn-lstm({filters}x{kernel_width},{units})"),
        }?;
        write!(f, "/w{}", self.window)
    }
}

/// Training hyperparameters. The values are recorded into the model
/// fingerprint so every reported number can be reproduced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub early_stop_patience: usize,
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            learning_rate: 1e-3,
            batch_size: 32,
            seed: 42,
            early_stop_patience: 10,
            validation_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.epochs < 1 {
            return Err(ModelError::InvalidSpec("epochs must be >= 1".to_string()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::InvalidSpec(
                "learning rate must be finite and non-negative".to_string(),
            ));
        }
        if self.batch_size < 1 {
            return Err(ModelError::InvalidSpec(
                "batch size must be >= 1".to_string(),
            ));
        }
        if !(0.0..0.5).contains(&self.validation_fraction) {
            return Err(ModelError::InvalidSpec(
                "validation fraction must be in [0, 0.5)".to_string(),
            ));
        }
        Ok(())
    }
}

/// Identifies what produced a trained model: the seed, a hash of
/// (spec, train config) and a hash of the training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub seed: u64,
    pub config_hash: u64,
    pub data_hash: u64,
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:016x}-{:016x}-{:016x}",
            self.seed, self.config_hash, self.data_hash
        )
    }
}

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Per-epoch mean squared error on scaled targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub train_mse: f64,
    pub val_mse: Option<f64>,
}

/// Layer parameters for each architecture.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum ModelWeights {
    Single {
        lstm: LstmCellParams,
        head: DenseParams,
    },
    Dual {
        first: LstmCellParams,
        second: LstmCellParams,
        head: DenseParams,
    },
    Bi {
        forward: LstmCellParams,
        backward: LstmCellParams,
        head: DenseParams,
    },
    Cnn {
        conv: Conv1dParams,
        lstm: LstmCellParams,
        head: DenseParams,
    },
}

fn named_lstm<'a>(prefix: &str, p: &'a LstmCellParams) -> Vec<(String, &'a Tensor)> {
    let gates = ["forget", "input", "candidate", "output"];
    p.gates()
        .into_iter()
        .zip(gates)
        .flat_map(|(gate, name)| {
            [
                (format!("{prefix}.{name}.w"), &gate.w),
                (format!("{prefix}.{name}.u"), &gate.u),
                (format!("{prefix}.{name}.b"), &gate.b),
            ]
        })
        .collect()
}

impl ModelWeights {
    fn zeros(spec: &ModelSpec) -> ModelWeights {
        match spec.variant {
            ModelVariant::SingleLstm { units } => ModelWeights::Single {
                lstm: LstmCellParams::zeros(units, 1),
                head: DenseParams::zeros(1, units),
            },
            ModelVariant::DualLstm { units1, units2 } => ModelWeights::Dual {
                first: LstmCellParams::zeros(units1, 1),
                second: LstmCellParams::zeros(units2, units1),
                head: DenseParams::zeros(1, units2),
            },
            ModelVariant::BiLstm { units } => ModelWeights::Bi {
                forward: LstmCellParams::zeros(units, 1),
                backward: LstmCellParams::zeros(units, 1),
                head: DenseParams::zeros(1, 2 * units),
            },
            ModelVariant::CnnLstm {
                filters,
                kernel_width,
                units,
            } => ModelWeights::Cnn {
                conv: Conv1dParams::zeros(filters, kernel_width, 1),
                lstm: LstmCellParams::zeros(units, filters),
                head: DenseParams::zeros(1, units),
            },
        }
    }

    pub(crate) fn zeros_like(&self) -> ModelWeights {
        match self {
            ModelWeights::Single { lstm, head } => ModelWeights::Single {
                lstm: lstm.zeros_like(),
                head: head.zeros_like(),
            },
            ModelWeights::Dual {
                first,
                second,
                head,
            } => ModelWeights::Dual {
                first: first.zeros_like(),
                second: second.zeros_like(),
                head: head.zeros_like(),
            },
            ModelWeights::Bi {
                forward,
                backward,
                head,
            } => ModelWeights::Bi {
                forward: forward.zeros_like(),
                backward: backward.zeros_like(),
                head: head.zeros_like(),
            },
            ModelWeights::Cnn { conv, lstm, head } => ModelWeights::Cnn {
                conv: conv.zeros_like(),
                lstm: lstm.zeros_like(),
                head: head.zeros_like(),
            },
        }
    }

    pub(crate) fn tensors(&self) -> Vec<&Tensor> {
        match self {
            ModelWeights::Single { lstm, head } => {
                let mut t = lstm.tensors();
                t.extend(head.tensors());
                t
            }
            ModelWeights::Dual {
                first,
                second,
                head,
            } => {
                let mut t = first.tensors();
                t.extend(second.tensors());
                t.extend(head.tensors());
                t
            }
            ModelWeights::Bi {
                forward,
                backward,
                head,
            } => {
                let mut t = forward.tensors();
                t.extend(backward.tensors());
                t.extend(head.tensors());
                t
            }
            ModelWeights::Cnn { conv, lstm, head } => {
                let mut t = conv.tensors();
                t.extend(lstm.tensors());
                t.extend(head.tensors());
                t
            }
        }
    }

    pub(crate) fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            ModelWeights::Single { lstm, head } => {
                let mut t = lstm.tensors_mut();
                t.extend(head.tensors_mut());
                t
            }
            ModelWeights::Dual {
                first,
                second,
                head,
            } => {
                let mut t = first.tensors_mut();
                t.extend(second.tensors_mut());
                t.extend(head.tensors_mut());
                t
            }
            ModelWeights::Bi {
                forward,
                backward,
                head,
            } => {
                let mut t = forward.tensors_mut();
                t.extend(backward.tensors_mut());
                t.extend(head.tensors_mut());
                t
            }
            ModelWeights::Cnn { conv, lstm, head } => {
                let mut t = conv.tensors_mut();
                t.extend(lstm.tensors_mut());
                t.extend(head.tensors_mut());
                t
            }
        }
    }

    /// Stable (name, tensor) listing; the serialization manifest order.
    pub(crate) fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        match self {
            ModelWeights::Single { lstm, head } => {
                let mut named = named_lstm("lstm", lstm);
                named.push(("head.weights".to_string(), &head.weights));
                named.push(("head.bias".to_string(), &head.bias));
                named
            }
            ModelWeights::Dual {
                first,
                second,
                head,
            } => {
                let mut named = named_lstm("lstm1", first);
                named.extend(named_lstm("lstm2", second));
                named.push(("head.weights".to_string(), &head.weights));
                named.push(("head.bias".to_string(), &head.bias));
                named
            }
            ModelWeights::Bi {
                forward,
                backward,
                head,
            } => {
                let mut named = named_lstm("forward", forward);
                named.extend(named_lstm("backward", backward));
                named.push(("head.weights".to_string(), &head.weights));
                named.push(("head.bias".to_string(), &head.bias));
                named
            }
            ModelWeights::Cnn { conv, lstm, head } => {
                let mut named = vec![
                    ("conv.kernels".to_string(), &conv.kernels),
                    ("conv.bias".to_string(), &conv.bias),
                ];
                named.extend(named_lstm("lstm", lstm));
                named.push(("head.weights".to_string(), &head.weights));
                named.push(("head.bias".to_string(), &head.bias));
                named
            }
        }
    }

    /// self += scale * other over every tensor.
    pub(crate) fn add_scaled(&mut self, other: &ModelWeights, scale: f64) {
        for (mine, theirs) in self.tensors_mut().into_iter().zip(other.tensors()) {
            mine.add_scaled(theirs, scale);
        }
    }
}

/// An untrained model: spec plus initialized weights.
#[derive(Debug, Clone)]
pub struct Model {
    pub spec: ModelSpec,
    pub(crate) weights: ModelWeights,
}

fn init_lstm(p: &mut LstmCellParams, rng: &mut Rng) {
    let hidden = p.hidden_dim();
    let input = p.input_dim();
    for gate in p.gates_mut() {
        init_scaled_uniform(&mut gate.w, input, hidden, rng);
        init_scaled_uniform(&mut gate.u, hidden, hidden, rng);
        gate.b.fill(0.0);
    }
    // Forget-gate bias starts open so the memory path survives early training.
    p.forget.b.fill(1.0);
}

fn init_dense(p: &mut DenseParams, rng: &mut Rng) {
    let (out, inp) = (p.out_dim(), p.in_dim());
    init_scaled_uniform(&mut p.weights, inp, out, rng);
    p.bias.fill(0.0);
}

fn init_conv(p: &mut Conv1dParams, rng: &mut Rng) {
    let fan_in = p.kernel_width() * p.in_channels();
    let fan_out = p.filters();
    init_scaled_uniform(&mut p.kernels, fan_in, fan_out, rng);
    p.bias.fill(0.0);
}

/// Build an untrained model with scaled-uniform weights, deterministic in the
/// seed.
pub fn build(spec: ModelSpec, seed: u64) -> Result<Model, ModelError> {
    spec.validate()?;
    let mut rng = Rng::seeded(seed);
    let mut weights = ModelWeights::zeros(&spec);
    match &mut weights {
        ModelWeights::Single { lstm, head } => {
            init_lstm(lstm, &mut rng);
            init_dense(head, &mut rng);
        }
        ModelWeights::Dual {
            first,
            second,
            head,
        } => {
            init_lstm(first, &mut rng);
            init_lstm(second, &mut rng);
            init_dense(head, &mut rng);
        }
        ModelWeights::Bi {
            forward,
            backward,
            head,
        } => {
            init_lstm(forward, &mut rng);
            init_lstm(backward, &mut rng);
            init_dense(head, &mut rng);
        }
        ModelWeights::Cnn { conv, lstm, head } => {
            init_conv(conv, &mut rng);
            init_lstm(lstm, &mut rng);
            init_dense(head, &mut rng);
        }
    }
    Ok(Model { spec, weights })
}

/// Forward state needed to backpropagate one sample.
pub(crate) enum SampleCache {
    Single {
        run: LstmSequenceRun,
    },
    Dual {
        first: LstmSequenceRun,
        second: LstmSequenceRun,
    },
    Bi {
        fwd: LstmSequenceRun,
        bwd: LstmSequenceRun,
    },
    Cnn {
        conv: Conv1dCache,
        run: LstmSequenceRun,
    },
}

pub(crate) struct SampleForward {
    pub prediction: f64,
    pub head_input: Vec<f64>,
    pub cache: SampleCache,
}

fn reversed_window(window_values: &[f64]) -> Vec<f64> {
    window_values.iter().rev().copied().collect()
}

/// Run one (window x 1) sample through the architecture.
pub(crate) fn forward_sample(
    weights: &ModelWeights,
    window_values: &[f64],
) -> Result<SampleForward, ModelError> {
    let (head_input, head, cache) = match weights {
        ModelWeights::Single { lstm, head } => {
            let run = lstm_sequence_forward(
                window_values,
                1,
                lstm,
                &LstmStepState::zeros(lstm.hidden_dim()),
            )?;
            (
                run.final_hidden().to_vec(),
                head,
                SampleCache::Single { run },
            )
        }
        ModelWeights::Dual {
            first,
            second,
            head,
        } => {
            let run1 = lstm_sequence_forward(
                window_values,
                1,
                first,
                &LstmStepState::zeros(first.hidden_dim()),
            )?;
            let hidden_seq = run1.hidden_sequence();
            let run2 = lstm_sequence_forward(
                &hidden_seq,
                first.hidden_dim(),
                second,
                &LstmStepState::zeros(second.hidden_dim()),
            )?;
            (
                run2.final_hidden().to_vec(),
                head,
                SampleCache::Dual {
                    first: run1,
                    second: run2,
                },
            )
        }
        ModelWeights::Bi {
            forward,
            backward,
            head,
        } => {
            let fwd = lstm_sequence_forward(
                window_values,
                1,
                forward,
                &LstmStepState::zeros(forward.hidden_dim()),
            )?;
            let reversed = reversed_window(window_values);
            let bwd = lstm_sequence_forward(
                &reversed,
                1,
                backward,
                &LstmStepState::zeros(backward.hidden_dim()),
            )?;
            let mut concat = fwd.final_hidden().to_vec();
            concat.extend_from_slice(bwd.final_hidden());
            (concat, head, SampleCache::Bi { fwd, bwd })
        }
        ModelWeights::Cnn { conv, lstm, head } => {
            let (conv_out, conv_cache) = conv1d_forward(window_values, conv)?;
            let run = lstm_sequence_forward(
                &conv_out,
                conv.filters(),
                lstm,
                &LstmStepState::zeros(lstm.hidden_dim()),
            )?;
            (
                run.final_hidden().to_vec(),
                head,
                SampleCache::Cnn {
                    conv: conv_cache,
                    run,
                },
            )
        }
    };
    let output = dense_forward(&head_input, head)?;
    Ok(SampleForward {
        prediction: output[0],
        head_input,
        cache,
    })
}

/// Exact gradients of one sample's forward pass with upstream dL/d(prediction).
pub(crate) fn backward_sample(
    weights: &ModelWeights,
    forward: &SampleForward,
    d_prediction: f64,
) -> Result<ModelWeights, ModelError> {
    match (weights, &forward.cache) {
        (ModelWeights::Single { lstm, head }, SampleCache::Single { run }) => {
            let (head_grads, d_hidden) =
                dense_backward(&forward.head_input, &[d_prediction], head)?;
            let (lstm_grads, _) =
                lstm_backward(SequenceGrad::FinalHidden(&d_hidden), &run.caches, lstm)?;
            Ok(ModelWeights::Single {
                lstm: lstm_grads,
                head: head_grads,
            })
        }
        (
            ModelWeights::Dual {
                first,
                second,
                head,
            },
            SampleCache::Dual {
                first: run1,
                second: run2,
            },
        ) => {
            let (head_grads, d_hidden) =
                dense_backward(&forward.head_input, &[d_prediction], head)?;
            let (second_grads, d_seq) =
                lstm_backward(SequenceGrad::FinalHidden(&d_hidden), &run2.caches, second)?;
            let (first_grads, _) =
                lstm_backward(SequenceGrad::PerStep(&d_seq), &run1.caches, first)?;
            Ok(ModelWeights::Dual {
                first: first_grads,
                second: second_grads,
                head: head_grads,
            })
        }
        (
            ModelWeights::Bi {
                forward: fwd_params,
                backward: bwd_params,
                head,
            },
            SampleCache::Bi { fwd, bwd },
        ) => {
            let (head_grads, d_concat) =
                dense_backward(&forward.head_input, &[d_prediction], head)?;
            let units = fwd_params.hidden_dim();
            let (fwd_grads, _) =
                lstm_backward(SequenceGrad::FinalHidden(&d_concat[..units]), &fwd.caches, fwd_params)?;
            let (bwd_grads, _) = lstm_backward(
                SequenceGrad::FinalHidden(&d_concat[units..]),
                &bwd.caches,
                bwd_params,
            )?;
            Ok(ModelWeights::Bi {
                forward: fwd_grads,
                backward: bwd_grads,
                head: head_grads,
            })
        }
        (ModelWeights::Cnn { conv, lstm, head }, SampleCache::Cnn { conv: conv_cache, run, .. }) => {
            let (head_grads, d_hidden) =
                dense_backward(&forward.head_input, &[d_prediction], head)?;
            let (lstm_grads, d_conv_out) =
                lstm_backward(SequenceGrad::FinalHidden(&d_hidden), &run.caches, lstm)?;
            let (conv_grads, _) = conv1d_backward(&d_conv_out, conv_cache, conv)?;
            Ok(ModelWeights::Cnn {
                conv: conv_grads,
                lstm: lstm_grads,
                head: head_grads,
            })
        }
        _ => Err(ModelError::Neural(NeuralError::CacheMismatch {
            context: "architecture",
        })),
    }
}

/// A trained model: weights plus the scaler that maps its outputs back to
/// price units, and the provenance needed to reproduce it.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub(crate) weights: ModelWeights,
    pub scaler: ScalingParams,
    pub fingerprint: Fingerprint,
    pub loss_history: Vec<EpochLoss>,
    pub best_epoch: usize,
}

impl TrainedModel {
    /// Predict the scaled next value from one window of scaled history.
    pub fn predict_scaled(&self, window_values: &[f64]) -> Result<f64, ModelError> {
        if window_values.len() != self.spec.window {
            return Err(ModelError::WindowMismatch {
                dataset: window_values.len(),
                model: self.spec.window,
            });
        }
        Ok(forward_sample(&self.weights, window_values)?.prediction)
    }

    /// Replace the scaler, e.g. when transferring the model to a symbol whose
    /// prices live on a different scale.
    pub fn with_scaler(mut self, scaler: ScalingParams) -> TrainedModel {
        self.scaler = scaler;
        self
    }

    /// One-step-ahead predictions in price units for every index in
    /// `test_range`. Each prediction at index t consumes the true scaled
    /// values [t - window, t) — predictions are never fed back.
    pub fn predict_one_step_series(
        &self,
        full_scaled: &[f64],
        test_range: Range<usize>,
    ) -> Result<Vec<f64>, ModelError> {
        let window = self.spec.window;
        if test_range.start < window {
            return Err(ModelError::InsufficientContext {
                index: test_range.start,
                window,
                available: test_range.start,
            });
        }
        if test_range.end > full_scaled.len() {
            let last = test_range.end - 1; // >= window, start was checked first
            return Err(ModelError::InsufficientContext {
                index: last,
                window,
                available: full_scaled.len().saturating_sub(last - window).min(window),
            });
        }
        let mut scaled_predictions = Vec::with_capacity(test_range.len());
        for t in test_range {
            let input = &full_scaled[t - window..t];
            scaled_predictions.push(forward_sample(&self.weights, input)?.prediction);
        }
        Ok(inverse_transform(&scaled_predictions, &self.scaler))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn building_is_deterministic_in_the_seed() {
        let spec = ModelSpec::bi_lstm();
        let a = build(spec, 7).unwrap();
        let b = build(spec, 7).unwrap();
        assert_eq!(a.weights, b.weights);
        let c = build(spec, 8).unwrap();
        assert_ne!(a.weights, c.weights);
    }

    #[test]
    fn bi_lstm_head_width_is_twice_units() {
        let model = build(ModelSpec::bi_lstm(), 1).unwrap();
        match &model.weights {
            ModelWeights::Bi { head, .. } => assert_eq!(head.in_dim(), 128),
            _ => panic!("wrong variant"),
        }
    }

    #[test]
    fn forget_bias_starts_at_one() {
        let model = build(ModelSpec::single_lstm(), 3).unwrap();
        match &model.weights {
            ModelWeights::Single { lstm, .. } => {
                assert!(lstm.forget.b.values().iter().all(|v| *v == 1.0));
                assert!(lstm.input.b.values().iter().all(|v| *v == 0.0));
            }
            _ => panic!("wrong variant"),
        }
    }

    #[test]
    fn cnn_window_shorter_than_kernel_rejected() {
        let spec = ModelSpec {
            variant: ModelVariant::CnnLstm {
                filters: 4,
                kernel_width: 4,
                units: 4,
            },
            window: 3,
        };
        assert!(matches!(build(spec, 1), Err(ModelError::InvalidSpec(_))));
    }

    #[test]
    fn every_architecture_runs_forward() {
        for spec in ModelSpec::all_defaults() {
            let model = build(spec, 11).unwrap();
            let out = forward_sample(&model.weights, &[0.1, 0.5, 0.9]).unwrap();
            assert!(out.prediction.is_finite(), "{spec}");
        }
    }

    #[test]
    fn dual_lstm_first_layer_emits_per_step_states() {
        let model = build(ModelSpec::dual_lstm(), 5).unwrap();
        if let ModelWeights::Dual { first, .. } = &model.weights {
            let run = lstm_sequence_forward(
                &[0.1, 0.2, 0.3],
                1,
                first,
                &LstmStepState::zeros(first.hidden_dim()),
            )
            .unwrap();
            assert_eq!(run.hidden_sequence().len(), 3 * first.hidden_dim());
        } else {
            panic!("wrong variant");
        }
    }

    #[test]
    fn bi_lstm_mirrored_params_agree_on_palindromes() {
        // With identical forward/backward parameters and a palindromic window,
        // both directions see the same sequence.
        let mut model = build(ModelSpec::bi_lstm(), 13).unwrap();
        if let ModelWeights::Bi {
            forward, backward, ..
        } = &mut model.weights
        {
            *backward = forward.clone();
        }
        let out = forward_sample(&model.weights, &[0.2, 0.8, 0.2]).unwrap();
        let units = 64;
        assert_eq!(out.head_input[..units], out.head_input[units..]);
    }

    #[test]
    fn mismatched_window_rejected_at_prediction() {
        let model = build(ModelSpec::single_lstm(), 3).unwrap();
        let trained = TrainedModel {
            spec: model.spec,
            weights: model.weights,
            scaler: ScalingParams {
                min_value: 0.0,
                max_value: 1.0,
            },
            fingerprint: Fingerprint {
                seed: 0,
                config_hash: 0,
                data_hash: 0,
            },
            loss_history: vec![],
            best_epoch: 0,
        };
        assert!(matches!(
            trained.predict_scaled(&[0.0, 0.0]),
            Err(ModelError::WindowMismatch { .. })
        ));
        assert!(matches!(
            trained.predict_one_step_series(&[0.1, 0.2, 0.3, 0.4], 2..4),
            Err(ModelError::InsufficientContext { .. })
        ));
    }

    #[test]
    fn predictions_ignore_future_values() {
        let model = build(ModelSpec::single_lstm(), 3).unwrap();
        let trained = TrainedModel {
            spec: model.spec,
            weights: model.weights,
            scaler: ScalingParams {
                min_value: 0.0,
                max_value: 1.0,
            },
            fingerprint: Fingerprint {
                seed: 0,
                config_hash: 0,
                data_hash: 0,
            },
            loss_history: vec![],
            best_epoch: 0,
        };
        let series = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let mut perturbed = series;
        perturbed[5] = 9.9;
        let a = trained.predict_one_step_series(&series, 4..5).unwrap();
        let b = trained.predict_one_step_series(&perturbed, 4..5).unwrap();
        assert_eq!(a, b);
    }
}
