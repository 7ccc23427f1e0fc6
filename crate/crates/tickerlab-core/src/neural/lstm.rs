//! LSTM cell: forward recursion and exact backpropagation through time.
//!
//! Gate layout follows the standard cell: sigmoid forget/input/output gates,
//! tanh candidate, additive memory path
//!
//! ```text
//! f = sig(W_f x + U_f h + b_f)      i = sig(W_i x + U_i h + b_i)
//! g = tanh(W_c x + U_c h + b_c)     o = sig(W_o x + U_o h + b_o)
//! c' = f .* c + i .* g              h' = o .* tanh(c')
//! ```
//!
//! No peephole connections. The forward pass records every gate value so the
//! backward pass can run without recomputation.

use serde::{Deserialize, Serialize};

use super::{sigmoid, NeuralError, Tensor};

/// Weights for one gate: input matrix (hidden x input), recurrent matrix
/// (hidden x hidden) and bias (hidden).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    pub w: Tensor,
    pub u: Tensor,
    pub b: Tensor,
}

impl GateParams {
    fn zeros(hidden: usize, input: usize) -> GateParams {
        GateParams {
            w: Tensor::zeros(&[hidden, input]),
            u: Tensor::zeros(&[hidden, hidden]),
            b: Tensor::zeros(&[hidden]),
        }
    }
}

/// Full parameter set of one LSTM cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCellParams {
    pub forget: GateParams,
    pub input: GateParams,
    pub candidate: GateParams,
    pub output: GateParams,
}

impl LstmCellParams {
    pub fn zeros(hidden: usize, input: usize) -> LstmCellParams {
        LstmCellParams {
            forget: GateParams::zeros(hidden, input),
            input: GateParams::zeros(hidden, input),
            candidate: GateParams::zeros(hidden, input),
            output: GateParams::zeros(hidden, input),
        }
    }

    pub fn zeros_like(&self) -> LstmCellParams {
        LstmCellParams::zeros(self.hidden_dim(), self.input_dim())
    }

    pub fn hidden_dim(&self) -> usize {
        self.forget.w.shape()[0]
    }

    pub fn input_dim(&self) -> usize {
        self.forget.w.shape()[1]
    }

    pub fn gates(&self) -> [&GateParams; 4] {
        [&self.forget, &self.input, &self.candidate, &self.output]
    }

    pub fn gates_mut(&mut self) -> [&mut GateParams; 4] {
        [
            &mut self.forget,
            &mut self.input,
            &mut self.candidate,
            &mut self.output,
        ]
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        self.gates()
            .into_iter()
            .flat_map(|g| [&g.w, &g.u, &g.b])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.gates_mut()
            .into_iter()
            .flat_map(|g| [&mut g.w, &mut g.u, &mut g.b])
            .collect()
    }
}

/// Hidden and cell state after one step.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmStepState {
    pub hidden: Vec<f64>,
    pub cell: Vec<f64>,
}

impl LstmStepState {
    pub fn zeros(hidden_dim: usize) -> LstmStepState {
        LstmStepState {
            hidden: vec![0.0; hidden_dim],
            cell: vec![0.0; hidden_dim],
        }
    }
}

/// Every intermediate value of one forward step, retained for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    forget: Vec<f64>,
    input: Vec<f64>,
    candidate: Vec<f64>,
    output: Vec<f64>,
    cell_tanh: Vec<f64>,
}

/// One LSTM step. Returns the next state and the activation cache.
pub fn lstm_cell_forward(
    x: &[f64],
    prev: &LstmStepState,
    p: &LstmCellParams,
) -> Result<(LstmStepState, LstmStepCache), NeuralError> {
    let hidden = p.hidden_dim();
    let input = p.input_dim();
    if x.len() != input {
        return Err(NeuralError::ShapeMismatch {
            context: "lstm input",
            expected: input,
            got: x.len(),
        });
    }
    if prev.hidden.len() != hidden || prev.cell.len() != hidden {
        return Err(NeuralError::ShapeMismatch {
            context: "lstm state",
            expected: hidden,
            got: prev.hidden.len(),
        });
    }

    // pre-activations a_g = W_g x + U_g h + b_g for each gate
    let mut pre = [
        p.forget.b.values().to_vec(),
        p.input.b.values().to_vec(),
        p.candidate.b.values().to_vec(),
        p.output.b.values().to_vec(),
    ];
    for (gate, acc) in p.gates().into_iter().zip(pre.iter_mut()) {
        gate.w.matvec_acc(x, acc);
        gate.u.matvec_acc(&prev.hidden, acc);
    }
    let [pre_f, pre_i, pre_g, pre_o] = pre;

    let forget: Vec<f64> = pre_f.iter().map(|&a| sigmoid(a)).collect();
    let input_gate: Vec<f64> = pre_i.iter().map(|&a| sigmoid(a)).collect();
    let candidate: Vec<f64> = pre_g.iter().map(|&a| a.tanh()).collect();
    let output: Vec<f64> = pre_o.iter().map(|&a| sigmoid(a)).collect();

    let mut cell = vec![0.0; hidden];
    let mut cell_tanh = vec![0.0; hidden];
    let mut hidden_next = vec![0.0; hidden];
    for j in 0..hidden {
        cell[j] = forget[j] * prev.cell[j] + input_gate[j] * candidate[j];
        cell_tanh[j] = cell[j].tanh();
        hidden_next[j] = output[j] * cell_tanh[j];
    }

    if !hidden_next.iter().chain(&cell).all(|v| v.is_finite()) {
        return Err(NeuralError::NonFiniteActivation { context: "lstm cell" });
    }

    let cache = LstmStepCache {
        x: x.to_vec(),
        h_prev: prev.hidden.clone(),
        c_prev: prev.cell.clone(),
        forget,
        input: input_gate,
        candidate,
        output,
        cell_tanh,
    };
    Ok((
        LstmStepState {
            hidden: hidden_next,
            cell,
        },
        cache,
    ))
}

/// Result of unrolling the cell over a sequence.
#[derive(Debug, Clone)]
pub struct LstmSequenceRun {
    /// State after each step, in order; the final hidden state is
    /// `states.last().unwrap().hidden`.
    pub states: Vec<LstmStepState>,
    pub caches: Vec<LstmStepCache>,
}

impl LstmSequenceRun {
    pub fn final_hidden(&self) -> &[f64] {
        &self.states.last().expect("sequence is non-empty").hidden
    }

    /// Per-step hidden states flattened to (timesteps x hidden).
    pub fn hidden_sequence(&self) -> Vec<f64> {
        self.states
            .iter()
            .flat_map(|s| s.hidden.iter().copied())
            .collect()
    }
}

/// Left-fold of [`lstm_cell_forward`] over `inputs`, a row-major
/// (timesteps x features) slice.
pub fn lstm_sequence_forward(
    inputs: &[f64],
    features: usize,
    p: &LstmCellParams,
    initial: &LstmStepState,
) -> Result<LstmSequenceRun, NeuralError> {
    if features == 0 || inputs.is_empty() || !inputs.len().is_multiple_of(features) {
        return Err(NeuralError::ShapeMismatch {
            context: "lstm sequence input",
            expected: features.max(1),
            got: inputs.len(),
        });
    }
    let timesteps = inputs.len() / features;
    let mut states = Vec::with_capacity(timesteps);
    let mut caches = Vec::with_capacity(timesteps);
    let mut state = initial.clone();
    for t in 0..timesteps {
        let x = &inputs[t * features..(t + 1) * features];
        let (next, cache) = lstm_cell_forward(x, &state, p)?;
        states.push(next.clone());
        caches.push(cache);
        state = next;
    }
    Ok(LstmSequenceRun { states, caches })
}

/// Upstream gradient for a sequence backward pass.
pub enum SequenceGrad<'a> {
    /// dL/dh for the final step only (the usual regression-head case).
    FinalHidden(&'a [f64]),
    /// dL/dh_t for every step, row-major (timesteps x hidden).
    PerStep(&'a [f64]),
}

/// Exact reverse-mode gradients of the forward fold.
///
/// Returns parameter gradients (same shapes as [`LstmCellParams`]) and input
/// gradients flattened to (timesteps x features).
pub fn lstm_backward(
    upstream: SequenceGrad<'_>,
    caches: &[LstmStepCache],
    p: &LstmCellParams,
) -> Result<(LstmCellParams, Vec<f64>), NeuralError> {
    if caches.is_empty() {
        return Err(NeuralError::CacheMismatch {
            context: "empty cache",
        });
    }
    let hidden = p.hidden_dim();
    let input = p.input_dim();
    let timesteps = caches.len();
    for cache in caches {
        if cache.x.len() != input || cache.h_prev.len() != hidden {
            return Err(NeuralError::CacheMismatch {
                context: "cache shape",
            });
        }
    }
    match &upstream {
        SequenceGrad::FinalHidden(g) if g.len() != hidden => {
            return Err(NeuralError::ShapeMismatch {
                context: "lstm upstream grad",
                expected: hidden,
                got: g.len(),
            })
        }
        SequenceGrad::PerStep(g) if g.len() != timesteps * hidden => {
            return Err(NeuralError::ShapeMismatch {
                context: "lstm upstream grad",
                expected: timesteps * hidden,
                got: g.len(),
            })
        }
        _ => {}
    }

    let mut grads = p.zeros_like();
    let mut input_grads = vec![0.0; timesteps * input];
    let mut dh_carry = vec![0.0; hidden];
    let mut dc_carry = vec![0.0; hidden];

    for t in (0..timesteps).rev() {
        let cache = &caches[t];

        let mut dh = dh_carry;
        match &upstream {
            SequenceGrad::FinalHidden(g) => {
                if t == timesteps - 1 {
                    for (d, g) in dh.iter_mut().zip(*g) {
                        *d += g;
                    }
                }
            }
            SequenceGrad::PerStep(g) => {
                for (d, g) in dh.iter_mut().zip(&g[t * hidden..(t + 1) * hidden]) {
                    *d += g;
                }
            }
        }

        // gate-level gradients, all length `hidden`
        let mut da_f = vec![0.0; hidden];
        let mut da_i = vec![0.0; hidden];
        let mut da_g = vec![0.0; hidden];
        let mut da_o = vec![0.0; hidden];
        let mut dc_prev = vec![0.0; hidden];
        for j in 0..hidden {
            let o = cache.output[j];
            let f = cache.forget[j];
            let i = cache.input[j];
            let g = cache.candidate[j];
            let tc = cache.cell_tanh[j];

            let d_out = dh[j] * tc;
            let dc = dc_carry[j] + dh[j] * o * (1.0 - tc * tc);

            da_o[j] = d_out * o * (1.0 - o);
            da_f[j] = dc * cache.c_prev[j] * f * (1.0 - f);
            da_i[j] = dc * g * i * (1.0 - i);
            da_g[j] = dc * i * (1.0 - g * g);
            dc_prev[j] = dc * f;
        }

        let dx = &mut input_grads[t * input..(t + 1) * input];
        let mut dh_prev = vec![0.0; hidden];
        let gate_grads = [&da_f, &da_i, &da_g, &da_o];
        for ((gate, grad_gate), da) in p
            .gates()
            .into_iter()
            .zip(grads.gates_mut())
            .zip(gate_grads)
        {
            grad_gate.w.outer_acc(da, &cache.x);
            grad_gate.u.outer_acc(da, &cache.h_prev);
            for (b, d) in grad_gate.b.values_mut().iter_mut().zip(da) {
                *b += d;
            }
            gate.w.matvec_transpose_acc(da, dx);
            gate.u.matvec_transpose_acc(da, &mut dh_prev);
        }

        dh_carry = dh_prev;
        dc_carry = dc_prev;
    }

    Ok((grads, input_grads))
}
