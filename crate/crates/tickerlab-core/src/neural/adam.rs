//! Adam optimizer with bias-corrected moments.

use serde::{Deserialize, Serialize};

use super::{NeuralError, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyperParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyperParams {
    fn default() -> Self {
        AdamHyperParams {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One Adam update over flat parameter/gradient/moment slices.
///
/// `step` counts from 1; the bias correction uses it directly.
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    first_moment: &mut [f64],
    second_moment: &mut [f64],
    step: usize,
    hp: &AdamHyperParams,
) -> Result<(), NeuralError> {
    assert!(step >= 1, "adam step counts from 1");
    let n = params.len();
    if grads.len() != n || first_moment.len() != n || second_moment.len() != n {
        return Err(NeuralError::ShapeMismatch {
            context: "adam update",
            expected: n,
            got: grads.len(),
        });
    }
    let bias1 = 1.0 - hp.beta1.powi(step as i32);
    let bias2 = 1.0 - hp.beta2.powi(step as i32);
    for i in 0..n {
        let g = grads[i];
        first_moment[i] = hp.beta1 * first_moment[i] + (1.0 - hp.beta1) * g;
        second_moment[i] = hp.beta2 * second_moment[i] + (1.0 - hp.beta2) * g * g;
        let m_hat = first_moment[i] / bias1;
        let v_hat = second_moment[i] / bias2;
        params[i] -= hp.learning_rate * m_hat / (v_hat.sqrt() + hp.epsilon);
    }
    Ok(())
}

/// Moment buffers for a whole model (one pair per parameter tensor).
#[derive(Debug, Clone)]
pub struct AdamState {
    hp: AdamHyperParams,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
    step: usize,
}

impl AdamState {
    pub fn new(params: &[&Tensor], hp: AdamHyperParams) -> AdamState {
        AdamState {
            hp,
            first: params.iter().map(|t| Tensor::zeros(t.shape())).collect(),
            second: params.iter().map(|t| Tensor::zeros(t.shape())).collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    /// Apply one update across all tensors; `params` and `grads` must be in
    /// the same order as at construction.
    pub fn apply(
        &mut self,
        params: Vec<&mut Tensor>,
        grads: &[&Tensor],
    ) -> Result<(), NeuralError> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(NeuralError::ShapeMismatch {
                context: "adam state",
                expected: self.first.len(),
                got: params.len(),
            });
        }
        self.step += 1;
        for ((param, grad), (m, v)) in params
            .into_iter()
            .zip(grads)
            .zip(self.first.iter_mut().zip(self.second.iter_mut()))
        {
            adam_update(
                param.values_mut(),
                grad.values(),
                m.values_mut(),
                v.values_mut(),
                self.step,
                &self.hp,
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut params = vec![1.0, -2.0, 3.0];
        let mut m = vec![0.0; 3];
        let mut v = vec![0.0; 3];
        adam_update(
            &mut params,
            &[0.0, 0.0, 0.0],
            &mut m,
            &mut v,
            1,
            &AdamHyperParams::default(),
        )
        .unwrap();
        assert_eq!(params, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_moves_by_roughly_learning_rate() {
        // With zero moments, m_hat/sqrt(v_hat) = g/|g| up to epsilon.
        let hp = AdamHyperParams::default();
        for g in [0.5, 2.0, -3.0, 1e-3] {
            let mut params = vec![0.0];
            let mut m = vec![0.0];
            let mut v = vec![0.0];
            adam_update(&mut params, &[g], &mut m, &mut v, 1, &hp).unwrap();
            let expected = -hp.learning_rate * g.signum();
            assert!(
                (params[0] - expected).abs() < 1e-5,
                "g={g} moved {}",
                params[0]
            );
        }
    }

    #[test]
    fn identical_histories_get_identical_updates() {
        let hp = AdamHyperParams::default();
        let mut params = vec![1.0, 1.0];
        let mut m = vec![0.0; 2];
        let mut v = vec![0.0; 2];
        for step in 1..=5 {
            adam_update(&mut params, &[0.3, 0.3], &mut m, &mut v, step, &hp).unwrap();
            assert_eq!(params[0], params[1]);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut params = vec![0.0];
        let mut m = vec![0.0];
        let mut v = vec![0.0];
        assert!(adam_update(
            &mut params,
            &[1.0, 2.0],
            &mut m,
            &mut v,
            1,
            &AdamHyperParams::default()
        )
        .is_err());
    }
}
