//! tickerlab: daily stock-price forecasting experiments from the command line.
//!
//! Exit codes: 0 success, 1 data error, 2 configuration error,
//! 3 training divergence.

mod options;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use options::{parse_model_name, GlobalOpts};
use tickerlab_core::experiments::{
    emit_plot, run_comparison, run_transfer, train_single, ExperimentError,
};
use tickerlab_core::kalman::filter_one_step_ahead;
use tickerlab_core::market_data::to_csv;
use tickerlab_core::metrics::MetricsReport;
use tickerlab_core::models::{save, ModelError};

#[derive(Parser)]
#[command(
    name = "tickerlab",
    about = "Benchmark a Kalman filter and four LSTM variants on next-day stock price prediction",
    version
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Download (or replay) daily history and write it as CSV
    Fetch {
        /// Ticker symbol, e.g. MSFT or ^GSPC
        #[arg(long)]
        symbol: String,
        /// Output file; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train every selected algorithm per symbol and report RMSE/MAE/R²
    Compare {
        /// Comma-separated ticker symbols
        #[arg(long, value_delimiter = ',')]
        symbols: Vec<String>,
        /// Comma-separated model list (single, dual, bi, cnn)
        #[arg(long)]
        models: Option<String>,
        /// Skip the Kalman filter row
        #[arg(long)]
        no_kalman: bool,
    },
    /// Train one model on one symbol and save it
    Train {
        #[arg(long)]
        symbol: String,
        /// Model name: single, dual, bi or cnn
        #[arg(long)]
        model: String,
        /// Where to write the trained model
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a saved model on another symbol (weights untouched,
    /// scaler refitted on the target's training partition)
    Transfer {
        /// Path to a saved .tklb model file
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        symbol: String,
    },
    /// Emit the train/test/prediction overlay (SVG + CSV) for one symbol
    Plot {
        #[arg(long)]
        symbol: String,
        /// Saved model file to plot
        #[arg(long, conflicts_with = "model")]
        model_file: Option<PathBuf>,
        /// Model name to train and plot (single, dual, bi, cnn)
        #[arg(long)]
        model: Option<String>,
        /// Plot the Kalman filter instead of a model
        #[arg(long, conflicts_with_all = ["model", "model_file"])]
        kalman: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Failure {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(err: ExperimentError) -> Failure {
        let code = match &err {
            ExperimentError::Config(_) => 2,
            ExperimentError::Model {
                source: ModelError::NonFiniteLoss { .. },
                ..
            } => 3,
            ExperimentError::Model {
                source: ModelError::InvalidSpec(_),
                ..
            } => 2,
            _ => 1,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

fn print_metrics(symbol: &str, algorithm: &str, metrics: &MetricsReport, fingerprint: &str) {
    println!(
        "{symbol:<8} {algorithm:<14} rmse {:>10.4}  mae {:>10.4}  r² {:>7.4}  n {:>5}  {fingerprint}",
        metrics.rmse, metrics.mae, metrics.r_squared, metrics.n
    );
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Fetch { symbol, out } => {
            let symbol = symbol.to_ascii_uppercase();
            let resolved = cli.global.resolve(vec![symbol.clone()], None).map_err(Failure::config)?;
            let series = resolved
                .source
                .load(&symbol, resolved.experiment.start, resolved.experiment.end)?;
            let text = to_csv(&series);
            match out {
                Some(path) => {
                    std::fs::write(&path, text)
                        .map_err(|err| Failure { code: 1, message: err.to_string() })?;
                    println!("{} bars of {symbol} written to {}", series.len(), path.display());
                }
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Compare {
            symbols,
            models,
            no_kalman,
        } => {
            let symbols: Vec<String> = symbols.iter().map(|s| s.to_ascii_uppercase()).collect();
            let resolved = cli
                .global
                .resolve(symbols, models.as_deref())
                .map_err(Failure::config)?;
            let mut experiment = resolved.experiment.clone();
            if no_kalman {
                experiment.kalman_enabled = false;
            }
            let report = run_comparison(&experiment, &resolved.source)?;
            print!("{report}");
            let (csv_path, txt_path) = report.write_files(&resolved.out_dir)?;
            eprintln!(
                "report written to {} and {}",
                csv_path.display(),
                txt_path.display()
            );
            Ok(())
        }
        Command::Train { symbol, model, out } => {
            let symbol = symbol.to_ascii_uppercase();
            let resolved = cli.global.resolve(vec![symbol.clone()], None).map_err(Failure::config)?;
            let spec = parse_model_name(&model, resolved.experiment.window)
                .map_err(Failure::config)?;
            let (trained, metrics) =
                train_single(&symbol, spec, &resolved.experiment, &resolved.source)?;
            print_metrics(
                &symbol,
                spec.variant.name(),
                &metrics,
                &trained.fingerprint.to_string(),
            );
            let path = out.unwrap_or_else(|| {
                resolved
                    .out_dir
                    .join(format!("{}-{}.tklb", symbol.replace('^', ""), spec.variant.name()))
            });
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)
                        .map_err(|err| Failure { code: 1, message: err.to_string() })?;
                }
            }
            save(&trained, &path).map_err(|err| Failure { code: 1, message: err.to_string() })?;
            eprintln!("model written to {}", path.display());
            Ok(())
        }
        Command::Transfer { model, symbol } => {
            let symbol = symbol.to_ascii_uppercase();
            let resolved = cli.global.resolve(vec![symbol.clone()], None).map_err(Failure::config)?;
            let (row, _) = run_transfer(&model, &symbol, &resolved.experiment, &resolved.source)?;
            print_metrics(&row.symbol, &row.algorithm, &row.metrics, &row.fingerprint);
            Ok(())
        }
        Command::Plot {
            symbol,
            model_file,
            model,
            kalman,
        } => {
            let symbol = symbol.to_ascii_uppercase();
            let resolved = cli.global.resolve(vec![symbol.clone()], None).map_err(Failure::config)?;
            let experiment = &resolved.experiment;
            let series = resolved
                .source
                .load(&symbol, experiment.start, experiment.end)?;
            let closes = series.prices(experiment.price_field);
            let (train_values, _) =
                tickerlab_core::preprocess::chrono_split(&closes, &experiment.split).map_err(
                    |source| ExperimentError::Preprocess {
                        symbol: symbol.clone(),
                        source,
                    },
                )?;
            let split = train_values.len();

            let (algorithm, predictions): (String, Vec<f64>) = if kalman {
                let config = experiment.kalman.resolve(&closes);
                let all = filter_one_step_ahead(&closes, &config).map_err(|source| {
                    ExperimentError::Kalman {
                        symbol: symbol.clone(),
                        source,
                    }
                })?;
                (
                    "kalman".to_string(),
                    all[split - config.variance_window..].to_vec(),
                )
            } else if let Some(path) = model_file {
                let (row, trained) = run_transfer(&path, &symbol, experiment, &resolved.source)?;
                let scaler = trained.scaler;
                let scaled = tickerlab_core::preprocess::transform(&closes, &scaler);
                let predictions = trained
                    .predict_one_step_series(&scaled, split..closes.len())
                    .map_err(|source| ExperimentError::Model {
                        symbol: symbol.clone(),
                        algorithm: row.algorithm.clone(),
                        source,
                    })?;
                (row.algorithm, predictions)
            } else {
                let name = model.ok_or_else(|| {
                    Failure::config("plot needs --model, --model-file or --kalman")
                })?;
                let spec =
                    parse_model_name(&name, experiment.window).map_err(Failure::config)?;
                let (trained, _) = train_single(&symbol, spec, experiment, &resolved.source)?;
                let scaled = tickerlab_core::preprocess::transform(&closes, &trained.scaler);
                let predictions = trained
                    .predict_one_step_series(&scaled, split..closes.len())
                    .map_err(|source| ExperimentError::Model {
                        symbol: symbol.clone(),
                        algorithm: spec.variant.name().to_string(),
                        source,
                    })?;
                (spec.variant.name().to_string(), predictions)
            };

            let stem = format!("{}-{}", symbol.replace('^', ""), algorithm);
            let artifacts = emit_plot(&series, experiment.price_field, &predictions, split, &resolved.out_dir, &stem)?;
            println!(
                "wrote {} and {}",
                artifacts.csv_path.display(),
                artifacts.svg_path.display()
            );
            Ok(())
        }
    }
}
