//! Turns a raw close-price sequence into model-ready data: min-max scaling,
//! sliding-window supervised datasets and the chronological train/test split.
//!
//! The scaler is fitted on the training partition only and then applied to
//! the full series. Test-period values may therefore fall outside [0, 1];
//! models are evaluated on their ability to extrapolate rather than being
//! handed the test range up front.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::neural::Tensor;

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("cannot fit a scaler on a constant sequence")]
    DegenerateRange,
    #[error("split leaves an empty partition ({length} values at fraction {fraction})")]
    EmptyPartition { length: usize, fraction: f64 },
}

/// Fitted min-max range. Maps [min_value, max_value] onto [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub min_value: f64,
    pub max_value: f64,
}

impl ScalingParams {
    fn span(&self) -> f64 {
        self.max_value - self.min_value
    }
}

/// Supervised sliding-window dataset: `inputs` has shape
/// (samples, window, 1) and `targets[k]` is the value one step past window k.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub inputs: Tensor,
    pub targets: Vec<f64>,
    pub window: usize,
}

impl WindowedDataset {
    pub fn samples(&self) -> usize {
        self.targets.len()
    }

    /// The k-th input window as a flat slice of length `window`.
    pub fn input(&self, k: usize) -> &[f64] {
        &self.inputs.values()[k * self.window..(k + 1) * self.window]
    }

    /// Keep only samples in [from, to) — used to partition by target index.
    pub fn slice_samples(&self, from: usize, to: usize) -> WindowedDataset {
        let values = self.inputs.values()[from * self.window..to * self.window].to_vec();
        WindowedDataset {
            inputs: Tensor::from_values(&[to - from, self.window, 1], values)
                .expect("sample slice keeps shape consistent"),
            targets: self.targets[from..to].to_vec(),
            window: self.window,
        }
    }
}

/// Chronological split fraction; the first `train_fraction` of the series
/// (by count, floored) becomes the training partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.75,
        }
    }
}

/// Fit min/max on a training sequence. Rejects constant and too-short input.
pub fn fit_scaler(train_values: &[f64]) -> Result<ScalingParams, PreprocessError> {
    if train_values.len() < 2 {
        return Err(PreprocessError::TooShort {
            needed: 2,
            got: train_values.len(),
        });
    }
    let min_value = train_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_value = train_values
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if max_value == min_value {
        return Err(PreprocessError::DegenerateRange);
    }
    Ok(ScalingParams {
        min_value,
        max_value,
    })
}

/// v -> (v - min) / (max - min). Values outside the fitted range map outside
/// [0, 1]; the map is affine everywhere.
pub fn transform(values: &[f64], p: &ScalingParams) -> Vec<f64> {
    values
        .iter()
        .map(|v| (v - p.min_value) / p.span())
        .collect()
}

/// v -> v * (max - min) + min; exact algebraic inverse of [`transform`].
pub fn inverse_transform(scaled: &[f64], p: &ScalingParams) -> Vec<f64> {
    scaled.iter().map(|v| v * p.span() + p.min_value).collect()
}

/// Build the sliding-window dataset over a scaled sequence. Window k covers
/// indices [k, k+window) and its target is index k+window.
pub fn make_windows(scaled: &[f64], window: usize) -> Result<WindowedDataset, PreprocessError> {
    assert!(window >= 1, "window must be at least 1");
    if scaled.len() <= window {
        return Err(PreprocessError::TooShort {
            needed: window + 1,
            got: scaled.len(),
        });
    }
    let samples = scaled.len() - window;
    let mut values = Vec::with_capacity(samples * window);
    let mut targets = Vec::with_capacity(samples);
    for k in 0..samples {
        values.extend_from_slice(&scaled[k..k + window]);
        targets.push(scaled[k + window]);
    }
    Ok(WindowedDataset {
        inputs: Tensor::from_values(&[samples, window, 1], values)
            .expect("window construction keeps shape consistent"),
        targets,
        window,
    })
}

/// First floor(fraction * N) values vs the rest; no shuffling.
pub fn chrono_split<'a>(
    values: &'a [f64],
    spec: &SplitSpec,
) -> Result<(&'a [f64], &'a [f64]), PreprocessError> {
    let cut = split_index(values.len(), spec);
    if cut == 0 || cut == values.len() {
        return Err(PreprocessError::EmptyPartition {
            length: values.len(),
            fraction: spec.train_fraction,
        });
    }
    Ok(values.split_at(cut))
}

/// Index of the first test element under `spec`.
pub fn split_index(length: usize, spec: &SplitSpec) -> usize {
    (spec.train_fraction * length as f64).floor() as usize
}
