//! Fully connected layer, y = W x + b. Used as the regression head that maps
//! a hidden state to the scalar next-step prediction.

use serde::{Deserialize, Serialize};

use super::{NeuralError, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseParams {
    /// (out x in)
    pub weights: Tensor,
    /// (out)
    pub bias: Tensor,
}

impl DenseParams {
    pub fn zeros(out_dim: usize, in_dim: usize) -> DenseParams {
        DenseParams {
            weights: Tensor::zeros(&[out_dim, in_dim]),
            bias: Tensor::zeros(&[out_dim]),
        }
    }

    pub fn zeros_like(&self) -> DenseParams {
        DenseParams::zeros(self.out_dim(), self.in_dim())
    }

    pub fn out_dim(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn in_dim(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        vec![&self.weights, &self.bias]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weights, &mut self.bias]
    }
}

pub fn dense_forward(x: &[f64], p: &DenseParams) -> Result<Vec<f64>, NeuralError> {
    if x.len() != p.in_dim() {
        return Err(NeuralError::ShapeMismatch {
            context: "dense input",
            expected: p.in_dim(),
            got: x.len(),
        });
    }
    let mut y = p.bias.values().to_vec();
    p.weights.matvec_acc(x, &mut y);
    if !y.iter().all(|v| v.is_finite()) {
        return Err(NeuralError::NonFiniteActivation { context: "dense" });
    }
    Ok(y)
}

/// Gradients for y = W x + b given upstream dL/dy: returns (param grads, dL/dx).
pub fn dense_backward(
    x: &[f64],
    dy: &[f64],
    p: &DenseParams,
) -> Result<(DenseParams, Vec<f64>), NeuralError> {
    if x.len() != p.in_dim() || dy.len() != p.out_dim() {
        return Err(NeuralError::ShapeMismatch {
            context: "dense backward",
            expected: p.in_dim(),
            got: x.len(),
        });
    }
    let mut grads = p.zeros_like();
    grads.weights.outer_acc(dy, x);
    grads.bias.values_mut().copy_from_slice(dy);
    let mut dx = vec![0.0; x.len()];
    p.weights.matvec_transpose_acc(dy, &mut dx);
    Ok((grads, dx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weight_passes_input_through() {
        let mut p = DenseParams::zeros(1, 1);
        p.weights.values_mut()[0] = 1.0;
        assert_eq!(dense_forward(&[0.37], &p).unwrap(), vec![0.37]);
    }

    #[test]
    fn zero_weights_output_bias() {
        let mut p = DenseParams::zeros(1, 3);
        p.bias.values_mut()[0] = 4.5;
        for x in [[0.0, 0.0, 0.0], [1.0, -2.0, 3.0]] {
            assert_eq!(dense_forward(&x, &p).unwrap(), vec![4.5]);
        }
    }

    #[test]
    fn backward_shapes_mirror_params() {
        let p = DenseParams::zeros(2, 3);
        let (grads, dx) = dense_backward(&[1.0, 2.0, 3.0], &[0.5, -0.5], &p).unwrap();
        assert_eq!(grads.weights.shape(), &[2, 3]);
        assert_eq!(grads.bias.shape(), &[2]);
        assert_eq!(dx.len(), 3);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let p = DenseParams::zeros(1, 2);
        assert!(dense_forward(&[1.0], &p).is_err());
    }
}
