//! Evaluation metrics for aligned prediction/actual pairs: RMSE, MAE and the
//! coefficient of determination. All three are computed on unscaled prices so
//! reported errors are in quote-currency units.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("prediction and actual lengths differ: {predicted} vs {actual}")]
    LengthMismatch { predicted: usize, actual: usize },
    #[error("metrics need at least one sample")]
    Empty,
    #[error("r-squared needs at least two samples")]
    TooFew,
    #[error("r-squared is undefined for constant actuals")]
    ConstantActuals,
}

/// One benchmark table row: error metrics for a (model, symbol) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rmse: f64,
    pub mae: f64,
    pub r_squared: f64,
    pub n: usize,
}

impl MetricsReport {
    pub fn compute(pred: &[f64], actual: &[f64]) -> Result<Self, MetricsError> {
        Ok(MetricsReport {
            rmse: rmse(pred, actual)?,
            mae: mae(pred, actual)?,
            r_squared: r_squared(pred, actual)?,
            n: pred.len(),
        })
    }
}

fn check_lengths(pred: &[f64], actual: &[f64]) -> Result<(), MetricsError> {
    if pred.len() != actual.len() {
        return Err(MetricsError::LengthMismatch {
            predicted: pred.len(),
            actual: actual.len(),
        });
    }
    if pred.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

/// Root mean square error: sqrt(mean((p - a)^2)).
pub fn rmse(pred: &[f64], actual: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(pred, actual)?;
    let sum_sq: f64 = pred
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok((sum_sq / pred.len() as f64).sqrt())
}

/// Mean absolute error: mean(|p - a|).
pub fn mae(pred: &[f64], actual: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(pred, actual)?;
    let sum_abs: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum();
    Ok(sum_abs / pred.len() as f64)
}

/// Coefficient of determination: 1 - SS_res / SS_tot, with SS_tot taken about
/// the mean of the actuals. May be negative for worse-than-mean predictors.
pub fn r_squared(pred: &[f64], actual: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(pred, actual)?;
    if pred.len() < 2 {
        return Err(MetricsError::TooFew);
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    if ss_tot == 0.0 {
        return Err(MetricsError::ConstantActuals);
    }
    let ss_res: f64 = pred
        .iter()
        .zip(actual)
        .map(|(p, a)| (a - p) * (a - p))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}
