//! Daily stock-price forecasting toolkit.
//!
//! Pipeline: ingest daily OHLCV history (CSV files, a chart HTTP endpoint, or
//! bundled offline fixtures), scale and window the close prices, then predict
//! next-day prices with a scalar Kalman filter and four LSTM-family models
//! built from first principles. One-step-ahead predictions over the
//! chronological test partition are scored with RMSE, MAE and R². Trained
//! models can be saved, reloaded bit-exactly and applied to other symbols
//! without weight retraining.

pub mod experiments;
pub mod fixtures;
pub mod kalman;
pub mod market_data;
pub mod metrics;
pub mod models;
pub mod neural;
pub mod preprocess;
pub mod rng;

pub use experiments::{ComparisonReport, DataSource, ExperimentConfig};
pub use kalman::{KalmanConfig, KalmanState};
pub use market_data::{PriceBar, PriceSeries};
pub use metrics::MetricsReport;
pub use models::{Model, ModelSpec, ModelVariant, TrainConfig, TrainedModel};
pub use preprocess::{ScalingParams, SplitSpec, WindowedDataset};
