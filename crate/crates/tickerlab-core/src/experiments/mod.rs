//! End-to-end experiment orchestration: per-symbol model comparison,
//! cross-symbol transfer of a saved model, and plot-artifact emission.

mod plot;

pub use plot::{emit_plot, PlotArtifacts};

use std::fmt;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use thiserror::Error;

use crate::kalman::{filter_one_step_ahead, KalmanConfig, KalmanError};
use crate::market_data::{fetch_daily, parse_csv, MarketDataError, PriceField, PriceSeries};
use crate::metrics::{MetricsError, MetricsReport};
use crate::models::{
    build, fnv1a64, load, train, Fingerprint, ModelError, ModelSpec, TrainConfig, TrainedModel,
};
use crate::preprocess::{
    chrono_split, fit_scaler, make_windows, transform, PreprocessError, SplitSpec,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("[{symbol}] data: {source}")]
    Data {
        symbol: String,
        #[source]
        source: MarketDataError,
    },
    #[error("[{symbol}] preprocessing: {source}")]
    Preprocess {
        symbol: String,
        #[source]
        source: PreprocessError,
    },
    #[error("[{symbol}/kalman] {source}")]
    Kalman {
        symbol: String,
        #[source]
        source: KalmanError,
    },
    #[error("[{symbol}/{algorithm}] {source}")]
    Model {
        symbol: String,
        algorithm: String,
        #[source]
        source: ModelError,
    },
    #[error("[{symbol}/{algorithm}] metrics: {source}")]
    Metrics {
        symbol: String,
        algorithm: String,
        #[source]
        source: MetricsError,
    },
    #[error("plot alignment: {0}")]
    Alignment(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Where price history comes from.
#[derive(Debug, Clone)]
pub enum DataSource {
    /// Compiled-in fixture series; never touches the network.
    Bundled,
    /// A chart HTTP endpoint (base URL).
    Endpoint(String),
    /// A directory of `<SYMBOL>.csv` files in the export layout.
    CsvDir(PathBuf),
}

impl DataSource {
    pub fn load(
        &self,
        symbol: &str,
        start: NaiveDate,
        end: NaiveDate,
    ) -> Result<PriceSeries, ExperimentError> {
        let tag = |source| ExperimentError::Data {
            symbol: symbol.to_string(),
            source,
        };
        match self {
            DataSource::Bundled => crate::fixtures::bundled_series(symbol)
                .and_then(|series| series.slice_range(start, end))
                .map_err(tag),
            DataSource::Endpoint(base) => fetch_daily(symbol, start, end, base).map_err(tag),
            DataSource::CsvDir(dir) => {
                let file = dir.join(format!("{}.csv", symbol.replace('^', "")));
                let text = std::fs::read_to_string(&file).map_err(|err| {
                    tag(MarketDataError::NetworkUnavailable(format!(
                        "cannot read {}: {err}",
                        file.display()
                    )))
                })?;
                parse_csv(symbol, &text)
                    .and_then(|series| series.slice_range(start, end))
                    .map_err(tag)
            }
        }
    }
}

/// Kalman settings with a per-series default for the measurement variance
/// (when `measurement_variance` is None it falls back to 1e-4 * mean^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanSettings {
    pub measurement_variance: Option<f64>,
    pub process_scale: f64,
    pub variance_window: usize,
    pub initial_variance: f64,
}

impl Default for KalmanSettings {
    fn default() -> Self {
        KalmanSettings {
            measurement_variance: None,
            process_scale: 1.0,
            variance_window: 3,
            initial_variance: 0.0,
        }
    }
}

impl KalmanSettings {
    pub fn resolve(&self, prices: &[f64]) -> KalmanConfig {
        let mut config = KalmanConfig::for_series(prices);
        if let Some(r) = self.measurement_variance {
            config.measurement_variance = r;
        }
        config.process_scale = self.process_scale;
        config.variance_window = self.variance_window;
        config.initial_variance = self.initial_variance;
        config
    }
}

/// Everything a comparison run needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub symbols: Vec<String>,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub split: SplitSpec,
    pub window: usize,
    pub models: Vec<ModelSpec>,
    pub kalman_enabled: bool,
    pub kalman: KalmanSettings,
    pub train: TrainConfig,
    /// Which per-day price the pipeline models (close by default).
    pub price_field: PriceField,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            symbols: vec![],
            start: NaiveDate::from_ymd_opt(2011, 1, 1).expect("valid date"),
            end: NaiveDate::from_ymd_opt(2021, 1, 1).expect("valid date"),
            split: SplitSpec::default(),
            window: 3,
            models: ModelSpec::all_defaults(),
            kalman_enabled: true,
            kalman: KalmanSettings::default(),
            train: TrainConfig::default(),
            price_field: PriceField::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.symbols.is_empty() {
            return Err(ExperimentError::Config("no symbols selected".to_string()));
        }
        if self.models.is_empty() && !self.kalman_enabled {
            return Err(ExperimentError::Config(
                "nothing to run: no models selected and the Kalman filter is disabled".to_string(),
            ));
        }
        if self.start >= self.end {
            return Err(ExperimentError::Config(format!(
                "empty date range [{}, {})",
                self.start, self.end
            )));
        }
        if self.window < 1 {
            return Err(ExperimentError::Config("window must be >= 1".to_string()));
        }
        if !(0.0 < self.split.train_fraction && self.split.train_fraction < 1.0) {
            return Err(ExperimentError::Config(
                "split fraction must be in (0, 1)".to_string(),
            ));
        }
        Ok(())
    }
}

/// One (symbol, algorithm) result row.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub symbol: String,
    pub algorithm: String,
    pub metrics: MetricsReport,
    pub fingerprint: String,
}

/// All rows of a comparison run, grouped by symbol and sorted by RMSE
/// ascending within each symbol.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("symbol,algorithm,rmse,mae,r_squared,n,fingerprint\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.symbol,
                row.algorithm,
                row.metrics.rmse,
                row.metrics.mae,
                row.metrics.r_squared,
                row.metrics.n,
                row.fingerprint
            ));
        }
        out
    }

    /// Write `comparison.csv` and `comparison.txt` into `dir`.
    pub fn write_files(&self, dir: &Path) -> Result<(PathBuf, PathBuf), ExperimentError> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join("comparison.csv");
        std::fs::write(&csv_path, self.to_csv())?;
        let txt_path = dir.join("comparison.txt");
        std::fs::write(&txt_path, format!("{self}"))?;
        Ok((csv_path, txt_path))
    }

    pub fn rows_for(&self, symbol: &str) -> Vec<&ComparisonRow> {
        self.rows.iter().filter(|r| r.symbol == symbol).collect()
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<8} {:<14} {:>12} {:>12} {:>9} {:>6}  fingerprint",
            "symbol", "algorithm", "rmse", "mae", "r_squared", "n"
        )?;
        for row in &self.rows {
            writeln!(
                f,
                "{:<8} {:<14} {:>12.4} {:>12.4} {:>9.4} {:>6}  {}",
                row.symbol,
                row.algorithm,
                row.metrics.rmse,
                row.metrics.mae,
                row.metrics.r_squared,
                row.metrics.n,
                row.fingerprint
            )?;
        }
        Ok(())
    }
}

/// The per-symbol data a run works on: raw prices, the fitted scaler, the
/// scaled series and the split boundary.
pub(crate) struct PreparedSymbol {
    pub prices: Vec<f64>,
    pub scaler: crate::preprocess::ScalingParams,
    pub scaled: Vec<f64>,
    pub split: usize,
}

pub(crate) fn prepare_symbol(
    symbol: &str,
    series: &PriceSeries,
    split: &SplitSpec,
    field: PriceField,
) -> Result<PreparedSymbol, ExperimentError> {
    let prices = series.prices(field);
    let tag = |source| ExperimentError::Preprocess {
        symbol: symbol.to_string(),
        source,
    };
    let (train_values, _) = chrono_split(&prices, split).map_err(tag)?;
    let scaler = fit_scaler(train_values).map_err(tag)?;
    let scaled = transform(&prices, &scaler);
    let boundary = train_values.len();
    Ok(PreparedSymbol {
        prices,
        scaler,
        scaled,
        split: boundary,
    })
}

/// Train one model spec on a prepared symbol and score it on the test
/// partition. Shared by comparison and (via a pre-loaded model) transfer.
fn train_and_score(
    symbol: &str,
    prepared: &PreparedSymbol,
    spec: ModelSpec,
    config: &ExperimentConfig,
) -> Result<(TrainedModel, MetricsReport), ExperimentError> {
    let algorithm = spec.variant.name().to_string();
    let tag_model = |source| ExperimentError::Model {
        symbol: symbol.to_string(),
        algorithm: algorithm.clone(),
        source,
    };
    let windows = make_windows(&prepared.scaled, config.window).map_err(|source| {
        ExperimentError::Preprocess {
            symbol: symbol.to_string(),
            source,
        }
    })?;
    // training samples are the windows whose target index precedes the split
    let train_samples = prepared.split.saturating_sub(config.window);
    if train_samples == 0 || train_samples > windows.samples() {
        return Err(ExperimentError::Preprocess {
            symbol: symbol.to_string(),
            source: PreprocessError::TooShort {
                needed: config.window + 1,
                got: prepared.split,
            },
        });
    }
    let train_data = windows.slice_samples(0, train_samples);
    let model = build(spec, config.train.seed).map_err(&tag_model)?;
    let trained = train(model, &train_data, prepared.scaler, &config.train).map_err(&tag_model)?;
    let metrics = score_model(symbol, &trained, prepared)?;
    Ok((trained, metrics))
}

/// One-step-ahead evaluation of a trained model over the test partition.
pub(crate) fn score_model(
    symbol: &str,
    model: &TrainedModel,
    prepared: &PreparedSymbol,
) -> Result<MetricsReport, ExperimentError> {
    let algorithm = model.spec.variant.name().to_string();
    let predictions = model
        .predict_one_step_series(&prepared.scaled, prepared.split..prepared.scaled.len())
        .map_err(|source| ExperimentError::Model {
            symbol: symbol.to_string(),
            algorithm: algorithm.clone(),
            source,
        })?;
    MetricsReport::compute(&predictions, &prepared.prices[prepared.split..]).map_err(|source| {
        ExperimentError::Metrics {
            symbol: symbol.to_string(),
            algorithm,
            source,
        }
    })
}

fn kalman_row(
    symbol: &str,
    prepared: &PreparedSymbol,
    settings: &KalmanSettings,
) -> Result<ComparisonRow, ExperimentError> {
    let config = settings.resolve(&prepared.prices);
    let predictions =
        filter_one_step_ahead(&prepared.prices, &config).map_err(|source| {
            ExperimentError::Kalman {
                symbol: symbol.to_string(),
                source,
            }
        })?;
    if prepared.split < config.variance_window {
        return Err(ExperimentError::Kalman {
            symbol: symbol.to_string(),
            source: KalmanError::TooShort {
                window: config.variance_window,
                got: prepared.split,
            },
        });
    }
    let test_predictions = &predictions[prepared.split - config.variance_window..];
    let actual = &prepared.prices[prepared.split..];
    let metrics =
        MetricsReport::compute(test_predictions, actual).map_err(|source| {
            ExperimentError::Metrics {
                symbol: symbol.to_string(),
                algorithm: "kalman".to_string(),
                source,
            }
        })?;
    let config_hash = fnv1a64(
        serde_json::to_string(&config)
            .expect("kalman config serializes")
            .as_bytes(),
    );
    let mut data_bytes = Vec::with_capacity(prepared.prices.len() * 8);
    for v in &prepared.prices {
        data_bytes.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    let fingerprint = Fingerprint {
        seed: 0,
        config_hash,
        data_hash: fnv1a64(&data_bytes),
    };
    Ok(ComparisonRow {
        symbol: symbol.to_string(),
        algorithm: "kalman".to_string(),
        metrics,
        fingerprint: fingerprint.to_string(),
    })
}

/// Run the full comparison: every selected algorithm on every symbol,
/// evaluated one step ahead over the chronological test partition.
pub fn run_comparison(
    config: &ExperimentConfig,
    source: &DataSource,
) -> Result<ComparisonReport, ExperimentError> {
    config.validate()?;
    let mut report = ComparisonReport::default();
    for symbol in &config.symbols {
        let series = source.load(symbol, config.start, config.end)?;
        let prepared = prepare_symbol(symbol, &series, &config.split, config.price_field)?;
        let mut rows = Vec::new();
        if config.kalman_enabled {
            rows.push(kalman_row(symbol, &prepared, &config.kalman)?);
        }
        for spec in &config.models {
            let mut spec = *spec;
            spec.window = config.window;
            let (trained, metrics) = train_and_score(symbol, &prepared, spec, config)?;
            rows.push(ComparisonRow {
                symbol: symbol.clone(),
                algorithm: spec.variant.name().to_string(),
                metrics,
                fingerprint: trained.fingerprint.to_string(),
            });
        }
        rows.sort_by(|a, b| {
            a.metrics
                .rmse
                .partial_cmp(&b.metrics.rmse)
                .expect("metrics are finite")
        });
        report.rows.extend(rows);
    }
    Ok(report)
}

/// Train one spec on one symbol and return the trained model (the CLI `train`
/// path; persistence is the caller's choice).
pub fn train_single(
    symbol: &str,
    spec: ModelSpec,
    config: &ExperimentConfig,
    source: &DataSource,
) -> Result<(TrainedModel, MetricsReport), ExperimentError> {
    let series = source.load(symbol, config.start, config.end)?;
    let prepared = prepare_symbol(symbol, &series, &config.split, config.price_field)?;
    train_and_score(symbol, &prepared, spec, config)
}

/// Apply a saved model to another symbol without touching its weights: only
/// the price scaler is refitted on the target's training partition (learned
/// dynamics transfer; the affine price map cannot).
pub fn run_transfer(
    model_path: &Path,
    target_symbol: &str,
    config: &ExperimentConfig,
    source: &DataSource,
) -> Result<(ComparisonRow, TrainedModel), ExperimentError> {
    let model = load(model_path).map_err(|source| ExperimentError::Model {
        symbol: target_symbol.to_string(),
        algorithm: "saved-model".to_string(),
        source,
    })?;
    let series = source.load(target_symbol, config.start, config.end)?;
    let prepared = prepare_symbol(target_symbol, &series, &config.split, config.price_field)?;
    let model = model.with_scaler(prepared.scaler);
    let metrics = score_model(target_symbol, &model, &prepared)?;
    let row = ComparisonRow {
        symbol: target_symbol.to_string(),
        algorithm: model.spec.variant.name().to_string(),
        metrics,
        fingerprint: model.fingerprint.to_string(),
    };
    Ok((row, model))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_selection_is_a_config_error() {
        let config = ExperimentConfig {
            symbols: vec!["MSFT".to_string()],
            models: vec![],
            kalman_enabled: false,
            ..ExperimentConfig::default()
        };
        assert!(matches!(
            run_comparison(&config, &DataSource::Bundled),
            Err(ExperimentError::Config(_))
        ));
    }

    #[test]
    fn no_symbols_is_a_config_error() {
        let config = ExperimentConfig::default();
        assert!(matches!(
            config.validate(),
            Err(ExperimentError::Config(_))
        ));
    }

    #[test]
    fn unknown_bundled_symbol_is_a_data_error() {
        let config = ExperimentConfig {
            symbols: vec!["ZZZZZZ".to_string()],
            models: vec![],
            ..ExperimentConfig::default()
        };
        assert!(matches!(
            run_comparison(&config, &DataSource::Bundled),
            Err(ExperimentError::Data { .. })
        ));
    }

    #[test]
    fn kalman_only_comparison_runs_on_fixture() {
        let config = ExperimentConfig {
            symbols: vec!["MSFT".to_string()],
            models: vec![],
            ..ExperimentConfig::default()
        };
        let report = run_comparison(&config, &DataSource::Bundled).unwrap();
        assert_eq!(report.rows.len(), 1);
        let row = &report.rows[0];
        assert_eq!(row.algorithm, "kalman");
        assert!(row.metrics.rmse >= row.metrics.mae);
        assert!(row.metrics.r_squared > 0.9);
    }

    #[test]
    fn report_rows_sort_by_rmse_within_symbol() {
        let report = ComparisonReport {
            rows: vec![],
        };
        assert_eq!(report.to_csv(), "symbol,algorithm,rmse,mae,r_squared,n,fingerprint\n");
    }
}
