//! Flag and config-file handling. Every experiment-relevant flag can also be
//! given in a `key = value` config file; explicit flags win over the file,
//! the file wins over built-in defaults.

use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::NaiveDate;
use clap::Args;
use tickerlab_core::experiments::{DataSource, ExperimentConfig, KalmanSettings};
use tickerlab_core::market_data::{PriceField, DEFAULT_ENDPOINT, ENDPOINT_ENV_VAR};
use tickerlab_core::models::{ModelSpec, ModelVariant, TrainConfig};
use tickerlab_core::preprocess::SplitSpec;

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Seed for weight initialization and batch shuffling
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Config file with `key = value` lines mirroring these flags
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Use the bundled offline fixtures instead of any endpoint
    #[arg(long, global = true)]
    pub offline: bool,

    /// Chart endpoint base URL (env TICKERLAB_ENDPOINT)
    #[arg(long, global = true, value_name = "URL")]
    pub endpoint: Option<String>,

    /// Read `<SYMBOL>.csv` files from this directory instead of fetching
    #[arg(long, global = true, value_name = "DIR")]
    pub csv_dir: Option<PathBuf>,

    /// First day of the experiment range (inclusive)
    #[arg(long, global = true, value_name = "YYYY-MM-DD")]
    pub start: Option<NaiveDate>,

    /// Day after the last day of the experiment range (exclusive)
    #[arg(long, global = true, value_name = "YYYY-MM-DD")]
    pub end: Option<NaiveDate>,

    /// Chronological train fraction
    #[arg(long, global = true)]
    pub split: Option<f64>,

    /// Input window length in trading days
    #[arg(long, global = true)]
    pub window: Option<usize>,

    /// Training epochs
    #[arg(long, global = true)]
    pub epochs: Option<usize>,

    /// Adam learning rate
    #[arg(long, global = true)]
    pub learning_rate: Option<f64>,

    /// Mini-batch size
    #[arg(long, global = true)]
    pub batch_size: Option<usize>,

    /// Early-stopping patience in epochs
    #[arg(long, global = true)]
    pub patience: Option<usize>,

    /// Fraction of the training samples held out for validation
    #[arg(long, global = true)]
    pub validation_fraction: Option<f64>,

    /// Kalman measurement variance R (default: 1e-4 * mean price squared)
    #[arg(long, global = true)]
    pub kalman_r: Option<f64>,

    /// Kalman process-noise multiplier on the local variance
    #[arg(long, global = true)]
    pub kalman_alpha: Option<f64>,

    /// Kalman local-variance window in days
    #[arg(long, global = true)]
    pub kalman_window: Option<usize>,

    /// Model the adjusted close instead of the raw close
    #[arg(long, global = true)]
    pub adj_close: bool,

    /// Directory for report and plot artifacts
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

/// Fully resolved settings shared by all subcommands.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub experiment: ExperimentConfig,
    pub source: DataSource,
    pub out_dir: PathBuf,
}

fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (index, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", index + 1))?;
        map.insert(
            key.trim().replace('-', "_").to_ascii_lowercase(),
            value.trim().to_string(),
        );
    }
    Ok(map)
}

fn parsed<T: std::str::FromStr>(
    map: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>, String> {
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| format!("config key {key}: cannot parse {raw:?}")),
    }
}

pub fn parse_model_list(raw: &str, window: usize) -> Result<Vec<ModelSpec>, String> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| parse_model_name(name, window))
        .collect()
}

pub fn parse_model_name(name: &str, window: usize) -> Result<ModelSpec, String> {
    let variant = match name.to_ascii_lowercase().as_str() {
        "single" | "single-lstm" => ModelVariant::SingleLstm { units: 64 },
        "dual" | "dual-lstm" | "stacked" => ModelVariant::DualLstm {
            units1: 64,
            units2: 64,
        },
        "bi" | "bi-lstm" | "bidirectional" => ModelVariant::BiLstm { units: 64 },
        "cnn" | "cnn-lstm" => ModelVariant::CnnLstm {
            filters: 64,
            kernel_width: 2,
            units: 64,
        },
        other => {
            return Err(format!(
                "unknown model {other:?}; expected single, dual, bi or cnn"
            ))
        }
    };
    Ok(ModelSpec { variant, window })
}

impl GlobalOpts {
    /// Merge CLI flags over the config file over defaults.
    pub fn resolve(&self, symbols: Vec<String>, models_flag: Option<&str>) -> Result<Resolved, String> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|err| format!("cannot read config {}: {err}", path.display()))?;
                parse_config_file(&text)?
            }
            None => BTreeMap::new(),
        };

        let defaults = ExperimentConfig::default();
        let window = self
            .window
            .or(parsed(&file, "window")?)
            .unwrap_or(defaults.window);
        let train = TrainConfig {
            epochs: self
                .epochs
                .or(parsed(&file, "epochs")?)
                .unwrap_or(TrainConfig::default().epochs),
            learning_rate: self
                .learning_rate
                .or(parsed(&file, "learning_rate")?)
                .unwrap_or(TrainConfig::default().learning_rate),
            batch_size: self
                .batch_size
                .or(parsed(&file, "batch_size")?)
                .unwrap_or(TrainConfig::default().batch_size),
            seed: self
                .seed
                .or(parsed(&file, "seed")?)
                .unwrap_or(TrainConfig::default().seed),
            early_stop_patience: self
                .patience
                .or(parsed(&file, "patience")?)
                .unwrap_or(TrainConfig::default().early_stop_patience),
            validation_fraction: self
                .validation_fraction
                .or(parsed(&file, "validation_fraction")?)
                .unwrap_or(TrainConfig::default().validation_fraction),
        };
        let kalman = KalmanSettings {
            measurement_variance: self.kalman_r.or(parsed(&file, "kalman_r")?),
            process_scale: self
                .kalman_alpha
                .or(parsed(&file, "kalman_alpha")?)
                .unwrap_or(1.0),
            variance_window: self
                .kalman_window
                .or(parsed(&file, "kalman_window")?)
                .unwrap_or(3),
            initial_variance: 0.0,
        };

        let file_symbols = file
            .get("symbols")
            .map(|raw| {
                raw.split(',')
                    .map(|s| s.trim().to_ascii_uppercase())
                    .filter(|s| !s.is_empty())
                    .collect::<Vec<_>>()
            })
            .unwrap_or_default();
        let symbols = if symbols.is_empty() { file_symbols } else { symbols };

        let models = match models_flag.map(str::to_string).or_else(|| file.get("models").cloned()) {
            Some(raw) => parse_model_list(&raw, window)?,
            None => {
                let mut specs = ModelSpec::all_defaults();
                for spec in &mut specs {
                    spec.window = window;
                }
                specs
            }
        };

        let kalman_enabled = parsed::<bool>(&file, "kalman")?.unwrap_or(true);
        let price_field = if self.adj_close || parsed::<bool>(&file, "adj_close")?.unwrap_or(false)
        {
            PriceField::AdjClose
        } else {
            PriceField::Close
        };

        let experiment = ExperimentConfig {
            symbols,
            start: self
                .start
                .or(parsed(&file, "start")?)
                .unwrap_or(defaults.start),
            end: self.end.or(parsed(&file, "end")?).unwrap_or(defaults.end),
            split: SplitSpec {
                train_fraction: self
                    .split
                    .or(parsed(&file, "split")?)
                    .unwrap_or(defaults.split.train_fraction),
            },
            window,
            models,
            kalman_enabled,
            kalman,
            train,
            price_field,
        };

        let offline = self.offline || parsed::<bool>(&file, "offline")?.unwrap_or(false);
        let csv_dir = self
            .csv_dir
            .clone()
            .or_else(|| file.get("csv_dir").map(PathBuf::from));
        let source = if offline {
            DataSource::Bundled
        } else if let Some(dir) = csv_dir {
            DataSource::CsvDir(dir)
        } else {
            let endpoint = self
                .endpoint
                .clone()
                .or_else(|| file.get("endpoint").cloned())
                .or_else(|| std::env::var(ENDPOINT_ENV_VAR).ok())
                .unwrap_or_else(|| DEFAULT_ENDPOINT.to_string());
            DataSource::Endpoint(endpoint)
        };

        let out_dir = self
            .out_dir
            .clone()
            .or_else(|| file.get("out_dir").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));

        Ok(Resolved {
            experiment,
            source,
            out_dir,
        })
    }
}
