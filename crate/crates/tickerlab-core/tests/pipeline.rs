//! End-to-end pipeline behavior on small, fast configurations: comparison
//! reports, self-transfer identity, plot artifacts and alternate data
//! sources. The full-size benchmark bands live in the acceptance suite.

use tickerlab_core::experiments::{
    emit_plot, run_comparison, run_transfer, train_single, DataSource, ExperimentConfig,
};
use tickerlab_core::fixtures::bundled_series;
use tickerlab_core::market_data::{to_csv, PriceField};
use tickerlab_core::models::{save, ModelSpec, ModelVariant, TrainConfig};
use tickerlab_core::preprocess::SplitSpec;

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        symbols: vec!["MSFT".to_string()],
        start: "2011-01-01".parse().unwrap(),
        end: "2014-01-01".parse().unwrap(),
        models: vec![ModelSpec {
            variant: ModelVariant::SingleLstm { units: 12 },
            window: 3,
        }],
        train: TrainConfig {
            epochs: 10,
            ..TrainConfig::default()
        },
        ..ExperimentConfig::default()
    }
}

#[test]
fn comparison_report_shape_and_ordering() {
    let config = small_config();
    let report = run_comparison(&config, &DataSource::Bundled).unwrap();
    assert_eq!(report.rows.len(), 2); // kalman + one model
    for row in &report.rows {
        assert!(row.metrics.rmse >= row.metrics.mae);
        assert!(row.metrics.n > 100);
        assert!(!row.fingerprint.is_empty());
    }
    assert!(report.rows[0].metrics.rmse <= report.rows[1].metrics.rmse);

    let csv = report.to_csv();
    assert!(csv.starts_with("symbol,algorithm,rmse,mae,r_squared,n,fingerprint\n"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn self_transfer_reproduces_the_comparison_row_bit_exactly() {
    let config = small_config();
    let source = DataSource::Bundled;
    let report = run_comparison(&config, &source).unwrap();
    let comparison_row = report
        .rows
        .iter()
        .find(|r| r.algorithm == "single-lstm")
        .unwrap();

    let (model, _) = train_single("MSFT", config.models[0], &config, &source).unwrap();
    let dir = std::env::temp_dir().join("tickerlab-pipeline");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("self-transfer.tklb");
    save(&model, &path).unwrap();

    let (transfer_row, _) = run_transfer(&path, "MSFT", &config, &source).unwrap();
    assert_eq!(
        transfer_row.metrics.rmse.to_bits(),
        comparison_row.metrics.rmse.to_bits()
    );
    assert_eq!(
        transfer_row.metrics.mae.to_bits(),
        comparison_row.metrics.mae.to_bits()
    );
    assert_eq!(
        transfer_row.metrics.r_squared.to_bits(),
        comparison_row.metrics.r_squared.to_bits()
    );
    assert_eq!(transfer_row.fingerprint, comparison_row.fingerprint);
}

#[test]
fn transferred_model_keeps_its_weights_but_adopts_the_target_scale() {
    let config = small_config();
    let source = DataSource::Bundled;
    let (model, _) = train_single("MSFT", config.models[0], &config, &source).unwrap();
    let dir = std::env::temp_dir().join("tickerlab-pipeline");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("keep-weights.tklb");
    save(&model, &path).unwrap();

    let (_, transferred) = run_transfer(&path, "TSLA", &config, &source).unwrap();
    assert_eq!(transferred.fingerprint, model.fingerprint); // weights provenance unchanged
    assert_ne!(transferred.scaler, model.scaler); // price map refitted
}

#[test]
fn plot_artifacts_from_a_pipeline_run() {
    let config = small_config();
    let source = DataSource::Bundled;
    let series = source.load("MSFT", config.start, config.end).unwrap();
    let closes = series.closing_prices();
    let split = (0.75 * closes.len() as f64).floor() as usize;

    let (model, _) = train_single("MSFT", config.models[0], &config, &source).unwrap();
    let scaled = tickerlab_core::preprocess::transform(&closes, &model.scaler);
    let predictions = model
        .predict_one_step_series(&scaled, split..closes.len())
        .unwrap();

    let dir = std::env::temp_dir().join("tickerlab-pipeline-plot");
    let artifacts = emit_plot(&series, PriceField::Close, &predictions, split, &dir, "msft-small").unwrap();

    let svg = std::fs::read_to_string(&artifacts.svg_path).unwrap();
    let parsed = roxmltree::Document::parse(&svg).expect("well-formed XML");
    let polylines = parsed
        .descendants()
        .filter(|n| n.has_tag_name("polyline"))
        .count();
    assert_eq!(polylines, 3);
    let split_markers = parsed
        .descendants()
        .filter(|n| n.has_tag_name("line"))
        .count();
    assert_eq!(split_markers, 1);

    let csv = std::fs::read_to_string(&artifacts.csv_path).unwrap();
    assert_eq!(csv.lines().count(), closes.len() + 1);
}

#[test]
fn csv_directory_source_matches_bundled() {
    let dir = std::env::temp_dir().join("tickerlab-pipeline-csvdir");
    std::fs::create_dir_all(&dir).unwrap();
    let full = bundled_series("MSFT").unwrap();
    std::fs::write(dir.join("MSFT.csv"), to_csv(&full)).unwrap();

    let source = DataSource::CsvDir(dir);
    let start = "2012-01-01".parse().unwrap();
    let end = "2012-06-01".parse().unwrap();
    let from_dir = source.load("MSFT", start, end).unwrap();
    let from_bundle = DataSource::Bundled.load("MSFT", start, end).unwrap();
    assert_eq!(from_dir, from_bundle);
}

#[test]
fn split_fraction_carries_through_the_pipeline() {
    let mut config = small_config();
    config.split = SplitSpec {
        train_fraction: 0.9,
    };
    config.models.clear(); // kalman only, fast
    let report = run_comparison(&config, &DataSource::Bundled).unwrap();
    let series = DataSource::Bundled
        .load("MSFT", config.start, config.end)
        .unwrap();
    let expected_test = series.len() - (0.9 * series.len() as f64).floor() as usize;
    assert_eq!(report.rows[0].metrics.n, expected_test);
}
