//! Valid (no padding) 1-D convolution over a (timesteps x channels) input,
//! cross-correlation convention, ReLU after the bias. Output has
//! timesteps - kernel_width + 1 steps and one channel per filter.

use serde::{Deserialize, Serialize};

use super::{NeuralError, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv1dParams {
    /// (filters x kernel_width x in_channels)
    pub kernels: Tensor,
    /// (filters)
    pub bias: Tensor,
}

impl Conv1dParams {
    pub fn zeros(filters: usize, kernel_width: usize, in_channels: usize) -> Conv1dParams {
        Conv1dParams {
            kernels: Tensor::zeros(&[filters, kernel_width, in_channels]),
            bias: Tensor::zeros(&[filters]),
        }
    }

    pub fn zeros_like(&self) -> Conv1dParams {
        Conv1dParams::zeros(self.filters(), self.kernel_width(), self.in_channels())
    }

    pub fn filters(&self) -> usize {
        self.kernels.shape()[0]
    }

    pub fn kernel_width(&self) -> usize {
        self.kernels.shape()[1]
    }

    pub fn in_channels(&self) -> usize {
        self.kernels.shape()[2]
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        vec![&self.kernels, &self.bias]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.kernels, &mut self.bias]
    }
}

/// Pre-activation values and the input copy needed by the backward pass.
#[derive(Debug, Clone)]
pub struct Conv1dCache {
    input: Vec<f64>,
    pre_activation: Vec<f64>,
    timesteps: usize,
}

/// Forward pass over a row-major (timesteps x in_channels) slice. Returns the
/// row-major (out_timesteps x filters) activations and the backward cache.
pub fn conv1d_forward(
    inputs: &[f64],
    p: &Conv1dParams,
) -> Result<(Vec<f64>, Conv1dCache), NeuralError> {
    let channels = p.in_channels();
    if channels == 0 || !inputs.len().is_multiple_of(channels) {
        return Err(NeuralError::ShapeMismatch {
            context: "conv1d input",
            expected: channels.max(1),
            got: inputs.len(),
        });
    }
    let timesteps = inputs.len() / channels;
    let width = p.kernel_width();
    if timesteps < width {
        return Err(NeuralError::WindowTooSmall {
            timesteps,
            kernel_width: width,
        });
    }
    let out_steps = timesteps - width + 1;
    let filters = p.filters();
    let kernels = p.kernels.values();
    let mut pre = vec![0.0; out_steps * filters];
    for t in 0..out_steps {
        for f in 0..filters {
            let kernel = &kernels[f * width * channels..(f + 1) * width * channels];
            let window = &inputs[t * channels..(t + width) * channels];
            let mut acc = p.bias.values()[f];
            for (k, x) in kernel.iter().zip(window) {
                acc += k * x;
            }
            pre[t * filters + f] = acc;
        }
    }
    if !pre.iter().all(|v| v.is_finite()) {
        return Err(NeuralError::NonFiniteActivation { context: "conv1d" });
    }
    let out = pre.iter().map(|&v| v.max(0.0)).collect();
    Ok((
        out,
        Conv1dCache {
            input: inputs.to_vec(),
            pre_activation: pre,
            timesteps,
        },
    ))
}

/// Gradients of the forward pass given upstream dL/d(output):
/// returns (param grads, dL/d(input)).
pub fn conv1d_backward(
    d_out: &[f64],
    cache: &Conv1dCache,
    p: &Conv1dParams,
) -> Result<(Conv1dParams, Vec<f64>), NeuralError> {
    let channels = p.in_channels();
    let width = p.kernel_width();
    let filters = p.filters();
    let out_steps = cache.timesteps - width + 1;
    if d_out.len() != out_steps * filters {
        return Err(NeuralError::CacheMismatch { context: "conv1d" });
    }
    let mut grads = p.zeros_like();
    let mut d_input = vec![0.0; cache.input.len()];
    let kernels = p.kernels.values();
    for t in 0..out_steps {
        for f in 0..filters {
            let idx = t * filters + f;
            if cache.pre_activation[idx] <= 0.0 {
                continue; // ReLU gate closed
            }
            let d = d_out[idx];
            grads.bias.values_mut()[f] += d;
            let kernel_grad =
                &mut grads.kernels.values_mut()[f * width * channels..(f + 1) * width * channels];
            let kernel = &kernels[f * width * channels..(f + 1) * width * channels];
            let window = &cache.input[t * channels..(t + width) * channels];
            let d_window = &mut d_input[t * channels..(t + width) * channels];
            for i in 0..width * channels {
                kernel_grad[i] += d * window[i];
                d_window[i] += d * kernel[i];
            }
        }
    }
    Ok((grads, d_input))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_one_identity_kernel_passes_positive_input() {
        let mut p = Conv1dParams::zeros(1, 1, 1);
        p.kernels.values_mut()[0] = 1.0;
        let (out, _) = conv1d_forward(&[1.0, 2.0, 3.0], &p).unwrap();
        assert_eq!(out, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn hand_cross_correlation() {
        let mut p = Conv1dParams::zeros(1, 2, 1);
        p.kernels.values_mut().copy_from_slice(&[1.0, 1.0]);
        let (out, _) = conv1d_forward(&[1.0, 2.0, 3.0], &p).unwrap();
        assert_eq!(out, vec![3.0, 5.0]);
    }

    #[test]
    fn relu_clamps_negative_pre_activations() {
        let mut p = Conv1dParams::zeros(1, 1, 1);
        p.kernels.values_mut()[0] = 1.0;
        let (out, _) = conv1d_forward(&[-1.0, 2.0], &p).unwrap();
        assert_eq!(out, vec![0.0, 2.0]);
    }

    #[test]
    fn input_shorter_than_kernel_rejected() {
        let p = Conv1dParams::zeros(1, 2, 1);
        assert_eq!(
            conv1d_forward(&[1.0], &p).unwrap_err(),
            NeuralError::WindowTooSmall {
                timesteps: 1,
                kernel_width: 2
            }
        );
    }

    #[test]
    fn backward_respects_relu_mask() {
        let mut p = Conv1dParams::zeros(1, 1, 1);
        p.kernels.values_mut()[0] = 1.0;
        let (_, cache) = conv1d_forward(&[-1.0, 2.0], &p).unwrap();
        let (grads, dx) = conv1d_backward(&[1.0, 1.0], &cache, &p).unwrap();
        // the negative step contributes nothing
        assert_eq!(grads.kernels.values(), &[2.0]);
        assert_eq!(dx, vec![0.0, 1.0]);
    }
}
