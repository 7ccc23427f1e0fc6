//! Mini-batch training: MSE on scaled targets, Adam, global-norm gradient
//! clipping, chronological validation split and early stopping.
//!
//! Determinism contract: (spec, seed, data, config) fully determine the loss
//! history and the final weights. Samples are accumulated in a fixed order,
//! so results do not depend on the environment.

use super::{
    backward_sample, forward_sample, fnv1a64, EpochLoss, Fingerprint, Model, ModelError,
    ModelWeights, TrainConfig, TrainedModel,
};
use crate::neural::{AdamHyperParams, AdamState};
use crate::preprocess::{ScalingParams, WindowedDataset};
use crate::rng::Rng;

const GRADIENT_CLIP_NORM: f64 = 1.0;

fn fingerprint(model: &Model, data: &WindowedDataset, config: &TrainConfig) -> Fingerprint {
    let config_text = serde_json::to_string(&(model.spec, config))
        .expect("spec and config serialize infallibly");
    let mut data_bytes = Vec::with_capacity((data.inputs.len() + data.targets.len()) * 8);
    for v in data.inputs.values().iter().chain(&data.targets) {
        data_bytes.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    Fingerprint {
        seed: config.seed,
        config_hash: fnv1a64(config_text.as_bytes()),
        data_hash: fnv1a64(&data_bytes),
    }
}

fn mse_over(
    weights: &ModelWeights,
    data: &WindowedDataset,
    indices: impl Iterator<Item = usize>,
) -> Result<(f64, usize), ModelError> {
    let mut sum = 0.0;
    let mut count = 0;
    for k in indices {
        let prediction = forward_sample(weights, data.input(k))?.prediction;
        let err = prediction - data.targets[k];
        sum += err * err;
        count += 1;
    }
    Ok((sum / count.max(1) as f64, count))
}

fn clip_global_norm(grads: &mut ModelWeights, max_norm: f64) {
    let norm_sq: f64 = grads
        .tensors()
        .iter()
        .flat_map(|t| t.values())
        .map(|v| v * v)
        .sum();
    let norm = norm_sq.sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for t in grads.tensors_mut() {
            t.scale(scale);
        }
    }
}

/// Train `model` on a windowed dataset of scaled values. `scaler` is the
/// fitted range that maps predictions back to prices; it travels with the
/// returned model.
pub fn train(
    model: Model,
    data: &WindowedDataset,
    scaler: ScalingParams,
    config: &TrainConfig,
) -> Result<TrainedModel, ModelError> {
    model.spec.validate()?;
    config.validate()?;
    if data.samples() == 0 {
        return Err(ModelError::EmptyDataset);
    }
    if data.window != model.spec.window {
        return Err(ModelError::WindowMismatch {
            dataset: data.window,
            model: model.spec.window,
        });
    }

    let print = fingerprint(&model, data, config);
    let samples = data.samples();
    let val_count = (config.validation_fraction * samples as f64).floor() as usize;
    let train_count = samples - val_count;
    if train_count == 0 {
        return Err(ModelError::EmptyDataset);
    }

    let mut weights = model.weights;
    let adam_hp = AdamHyperParams {
        learning_rate: config.learning_rate,
        ..AdamHyperParams::default()
    };
    let mut adam = AdamState::new(&weights.tensors(), adam_hp);
    let base_rng = Rng::seeded(config.seed);

    let mut order: Vec<usize> = (0..train_count).collect();
    let mut history: Vec<EpochLoss> = Vec::new();
    let mut best_epoch = 0usize;
    let mut best_val = f64::INFINITY;
    let mut best_weights = weights.clone();
    let mut stale_epochs = 0usize;

    for epoch in 0..config.epochs {
        let mut epoch_rng = base_rng.substream(epoch as u64);
        epoch_rng.shuffle(&mut order);

        let mut epoch_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = weights.zeros_like();
            let inv = 1.0 / batch.len() as f64;
            for &k in batch {
                let forward = forward_sample(&weights, data.input(k)).map_err(|err| {
                    divergence_or(err, epoch)
                })?;
                let err = forward.prediction - data.targets[k];
                epoch_sum += err * err;
                let sample_grads =
                    backward_sample(&weights, &forward, 2.0 * err * inv).map_err(|err| {
                        divergence_or(err, epoch)
                    })?;
                grads.add_scaled(&sample_grads, 1.0);
            }
            clip_global_norm(&mut grads, GRADIENT_CLIP_NORM);
            adam.apply(weights.tensors_mut(), &grads.tensors())?;
        }
        let train_mse = epoch_sum / train_count as f64;

        let val_mse = if val_count > 0 {
            let (mse, _) = mse_over(&weights, data, train_count..samples)
                .map_err(|err| divergence_or(err, epoch))?;
            Some(mse)
        } else {
            None
        };

        if !train_mse.is_finite() || val_mse.is_some_and(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteLoss { epoch });
        }
        history.push(EpochLoss { train_mse, val_mse });

        match val_mse {
            Some(v) if v < best_val => {
                best_val = v;
                best_epoch = epoch;
                best_weights = weights.clone();
                stale_epochs = 0;
            }
            Some(_) => {
                stale_epochs += 1;
                if stale_epochs >= config.early_stop_patience {
                    break;
                }
            }
            None => {
                best_epoch = epoch;
            }
        }
    }

    let final_weights = if val_count > 0 { best_weights } else { weights };
    Ok(TrainedModel {
        spec: model.spec,
        weights: final_weights,
        scaler,
        fingerprint: print,
        loss_history: history,
        best_epoch,
    })
}

fn divergence_or(err: ModelError, epoch: usize) -> ModelError {
    match err {
        ModelError::Neural(crate::neural::NeuralError::NonFiniteActivation { .. }) => {
            ModelError::NonFiniteLoss { epoch }
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build, ModelSpec, ModelVariant};
    use crate::preprocess::{fit_scaler, make_windows, transform};

    fn unit_scaler() -> ScalingParams {
        ScalingParams {
            min_value: 0.0,
            max_value: 1.0,
        }
    }

    fn tiny_spec(units: usize) -> ModelSpec {
        ModelSpec {
            variant: ModelVariant::SingleLstm { units },
            window: 3,
        }
    }

    #[test]
    fn constant_target_is_learned() {
        let values = vec![0.5; 40];
        let data = make_windows(&values, 3).unwrap();
        let config = TrainConfig {
            epochs: 200,
            validation_fraction: 0.0,
            early_stop_patience: usize::MAX,
            ..TrainConfig::default()
        };
        let model = build(tiny_spec(8), 1).unwrap();
        let trained = train(model, &data, unit_scaler(), &config).unwrap();
        let final_loss = trained.loss_history.last().unwrap().train_mse;
        assert!(final_loss < 1e-4, "final loss {final_loss}");
        let p = trained.predict_scaled(&[0.5, 0.5, 0.5]).unwrap();
        assert!((p - 0.5).abs() < 0.05, "prediction {p}");
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let values: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin() * 0.4 + 0.5).collect();
        let data = make_windows(&values, 3).unwrap();
        let config = TrainConfig {
            epochs: 5,
            learning_rate: 0.0,
            validation_fraction: 0.0,
            ..TrainConfig::default()
        };
        let model = build(tiny_spec(4), 2).unwrap();
        let before = model.weights.clone();
        let trained = train(model, &data, unit_scaler(), &config).unwrap();
        assert_eq!(trained.weights, before);
        // each epoch sums the same per-sample losses in a different shuffle
        // order, so flatness holds to summation noise, not bitwise
        let first = trained.loss_history.first().unwrap().train_mse;
        for epoch in &trained.loss_history {
            assert!((epoch.train_mse - first).abs() < 1e-12 * first.max(1.0));
        }
    }

    #[test]
    fn training_loss_decreases() {
        let values: Vec<f64> = (0..120)
            .map(|i| (i as f64 * 0.15).sin() * 0.4 + 0.5)
            .collect();
        let data = make_windows(&values, 3).unwrap();
        let config = TrainConfig {
            epochs: 30,
            validation_fraction: 0.0,
            ..TrainConfig::default()
        };
        let model = build(tiny_spec(8), 3).unwrap();
        let trained = train(model, &data, unit_scaler(), &config).unwrap();
        let first = trained.loss_history.first().unwrap().train_mse;
        let last = trained.loss_history.last().unwrap().train_mse;
        assert!(last <= first, "loss went {first} -> {last}");
    }

    #[test]
    fn best_epoch_minimizes_validation_loss() {
        let values: Vec<f64> = (0..150)
            .map(|i| (i as f64 * 0.21).sin() * 0.3 + 0.5)
            .collect();
        let data = make_windows(&values, 3).unwrap();
        let config = TrainConfig {
            epochs: 25,
            ..TrainConfig::default()
        };
        let model = build(tiny_spec(8), 5).unwrap();
        let trained = train(model, &data, unit_scaler(), &config).unwrap();
        let best = trained.loss_history[trained.best_epoch].val_mse.unwrap();
        for epoch in &trained.loss_history {
            assert!(best <= epoch.val_mse.unwrap() + 1e-15);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let values: Vec<f64> = (0..60).map(|i| ((i * i) % 17) as f64 / 17.0).collect();
        let data = make_windows(&values, 3).unwrap();
        let config = TrainConfig {
            epochs: 8,
            ..TrainConfig::default()
        };
        let a = train(build(tiny_spec(6), 9).unwrap(), &data, unit_scaler(), &config).unwrap();
        let b = train(build(tiny_spec(6), 9).unwrap(), &data, unit_scaler(), &config).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.loss_history, b.loss_history);
        assert_eq!(a.fingerprint, b.fingerprint);
    }

    #[test]
    fn sine_wave_reaches_high_held_out_fit() {
        // end-to-end sanity on a clean learnable signal
        let n = 500;
        let raw: Vec<f64> = (0..n).map(|i| (i as f64 * 0.08).sin() * 40.0 + 100.0).collect();
        let (train_vals, _) = crate::preprocess::chrono_split(&raw, &Default::default()).unwrap();
        let scaler = fit_scaler(train_vals).unwrap();
        let scaled = transform(&raw, &scaler);
        let split = train_vals.len();

        let data = make_windows(&scaled[..split], 3).unwrap();
        let config = TrainConfig {
            epochs: 60,
            ..TrainConfig::default()
        };
        let model = build(tiny_spec(16), 42).unwrap();
        let trained = train(model, &data, scaler, &config).unwrap();

        let predictions = trained.predict_one_step_series(&scaled, split..n).unwrap();
        let actual = &raw[split..];
        let r2 = crate::metrics::r_squared(&predictions, actual).unwrap();
        assert!(r2 > 0.9, "r2 = {r2}");
    }
}
