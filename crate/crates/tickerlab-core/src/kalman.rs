//! Scalar linear Kalman filter for one-step-ahead price prediction.
//!
//! The state model is a random walk: the predicted next price equals the
//! current estimate, and the process noise for day t is proportional to the
//! population variance of the closing prices over the preceding
//! `variance_window` days. The filter runs on raw (unscaled) prices.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KalmanError {
    #[error("local variance at index {t} needs {window} prior values")]
    InsufficientHistory { t: usize, window: usize },
    #[error("series of {got} values is too short; need more than {window}")]
    TooShort { window: usize, got: usize },
}

/// Filter configuration. `measurement_variance` is R, `process_scale` the
/// multiplier applied to the local historical variance to obtain Q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanConfig {
    pub measurement_variance: f64,
    pub process_scale: f64,
    pub variance_window: usize,
    pub initial_variance: f64,
}

impl KalmanConfig {
    pub fn new(
        measurement_variance: f64,
        process_scale: f64,
        variance_window: usize,
        initial_variance: f64,
    ) -> KalmanConfig {
        let config = KalmanConfig {
            measurement_variance,
            process_scale,
            variance_window,
            initial_variance,
        };
        config.validate();
        config
    }

    /// Defaults for a concrete series: R = 1e-4 * (mean price)^2, unit
    /// process scale, three-day variance window, zero initial variance.
    pub fn for_series(prices: &[f64]) -> KalmanConfig {
        assert!(!prices.is_empty(), "cannot derive defaults from no data");
        let mean = prices.iter().sum::<f64>() / prices.len() as f64;
        KalmanConfig {
            measurement_variance: (1e-4 * mean * mean).max(1e-12),
            process_scale: 1.0,
            variance_window: 3,
            initial_variance: 0.0,
        }
    }

    fn validate(&self) {
        assert!(self.measurement_variance > 0.0, "R must be positive");
        assert!(self.process_scale > 0.0, "process scale must be positive");
        assert!(self.variance_window >= 2, "variance window must be >= 2");
        assert!(self.initial_variance >= 0.0, "P0 must be non-negative");
    }
}

/// Scalar state estimate and its variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanState {
    pub estimate: f64,
    pub variance: f64,
}

/// Population variance (divisor = window) of `prices[t - window .. t]`.
pub fn local_variance(prices: &[f64], t: usize, window: usize) -> Result<f64, KalmanError> {
    if t < window {
        return Err(KalmanError::InsufficientHistory { t, window });
    }
    let slice = &prices[t - window..t];
    let mean = slice.iter().sum::<f64>() / window as f64;
    Ok(slice.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / window as f64)
}

/// One predict/update cycle: P- = P + Q, K = P- / (P- + R),
/// x' = x + K (z - x), P' = (1 - K) P-.
pub fn kalman_step(
    state: KalmanState,
    measurement: f64,
    process_variance: f64,
    config: &KalmanConfig,
) -> KalmanState {
    let predicted_variance = state.variance + process_variance;
    let gain = predicted_variance / (predicted_variance + config.measurement_variance);
    debug_assert!((0.0..=1.0).contains(&gain));
    let estimate = state.estimate + gain * (measurement - state.estimate);
    let variance = (1.0 - gain) * predicted_variance;
    debug_assert!(variance >= 0.0 && variance <= predicted_variance);
    KalmanState { estimate, variance }
}

/// Run the filter over a series and emit the one-step-ahead prediction for
/// every index t in [variance_window, N). The prediction for day t uses only
/// prices from days before t; output index i predicts
/// `prices[variance_window + i]`.
///
/// The first `variance_window` days are warm-up for the local variance
/// estimate: the state starts at the last warm-up price with variance P0 and
/// no predictions are emitted for those days.
pub fn filter_one_step_ahead(
    prices: &[f64],
    config: &KalmanConfig,
) -> Result<Vec<f64>, KalmanError> {
    config.validate();
    let window = config.variance_window;
    if prices.len() <= window {
        return Err(KalmanError::TooShort {
            window,
            got: prices.len(),
        });
    }
    let mut state = KalmanState {
        estimate: prices[window - 1],
        variance: config.initial_variance,
    };
    let mut predictions = Vec::with_capacity(prices.len() - window);
    for t in window..prices.len() {
        predictions.push(state.estimate);
        let q = config.process_scale * local_variance(prices, t, window)?;
        state = kalman_step(state, prices[t], q, config);
    }
    Ok(predictions)
}
