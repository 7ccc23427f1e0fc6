//! Property tests for the metric and market-data invariants.

use proptest::prelude::*;
use tickerlab_core::market_data::{parse_csv, to_csv, PriceBar, PriceSeries};
use tickerlab_core::metrics::{mae, r_squared, rmse};

fn aligned_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..40).prop_flat_map(|n| {
        (
            proptest::collection::vec(-1e4..1e4f64, n),
            proptest::collection::vec(-1e4..1e4f64, n),
        )
    })
}

proptest! {
    #[test]
    fn rmse_dominates_mae((pred, actual) in aligned_pair()) {
        let rmse = rmse(&pred, &actual).unwrap();
        let mae = mae(&pred, &actual).unwrap();
        prop_assert!(rmse >= mae - 1e-12);
    }

    #[test]
    fn metrics_are_permutation_invariant((pred, actual) in aligned_pair(), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..pred.len()).collect();
        let mut rng = tickerlab_core::rng::Rng::seeded(seed);
        rng.shuffle(&mut order);
        let pred_shuffled: Vec<f64> = order.iter().map(|&i| pred[i]).collect();
        let actual_shuffled: Vec<f64> = order.iter().map(|&i| actual[i]).collect();

        let a = rmse(&pred, &actual).unwrap();
        let b = rmse(&pred_shuffled, &actual_shuffled).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));

        let a = mae(&pred, &actual).unwrap();
        let b = mae(&pred_shuffled, &actual_shuffled).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn errors_are_translation_invariant((pred, actual) in aligned_pair(), shift in -1e4..1e4f64) {
        let pred_shifted: Vec<f64> = pred.iter().map(|p| p + shift).collect();
        let actual_shifted: Vec<f64> = actual.iter().map(|a| a + shift).collect();
        let a = rmse(&pred, &actual).unwrap();
        let b = rmse(&pred_shifted, &actual_shifted).unwrap();
        prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0));
        let a = mae(&pred, &actual).unwrap();
        let b = mae(&pred_shifted, &actual_shifted).unwrap();
        prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0));
    }

    #[test]
    fn r_squared_is_affine_invariant(
        (pred, actual) in aligned_pair(),
        scale in prop_oneof![-100.0..-0.01f64, 0.01..100.0f64],
        shift in -1e3..1e3f64,
    ) {
        // needs non-constant actuals
        prop_assume!(actual.iter().any(|a| (a - actual[0]).abs() > 1e-6));
        let map = |v: f64| scale * v + shift;
        let a = r_squared(&pred, &actual).unwrap();
        let b = r_squared(
            &pred.iter().cloned().map(map).collect::<Vec<_>>(),
            &actual.iter().cloned().map(map).collect::<Vec<_>>(),
        )
        .unwrap();
        prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {b}");
    }
}

fn arbitrary_bar(day_offset: usize) -> impl Strategy<Value = PriceBar> {
    (
        0.01..1e5f64,
        0.0..0.3f64,
        0.0..0.3f64,
        0.01..1e5f64,
        any::<u32>(),
    )
        .prop_map(move |(open, up, down, close, volume)| {
            let base_date: chrono::NaiveDate = "2011-01-03".parse().unwrap();
            PriceBar {
                date: base_date + chrono::Duration::days(day_offset as i64),
                open,
                high: open.max(close) * (1.0 + up),
                low: open.min(close) * (1.0 - down),
                close,
                adj_close: close,
                volume: volume as u64,
            }
        })
}

fn arbitrary_series() -> impl Strategy<Value = PriceSeries> {
    (1usize..30).prop_flat_map(|n| {
        (0..n)
            .map(arbitrary_bar)
            .collect::<Vec<_>>()
            .prop_map(|bars| PriceSeries::new("PROP", bars).expect("strategy keeps invariants"))
    })
}

proptest! {
    #[test]
    fn csv_round_trip_is_identity(series in arbitrary_series()) {
        let text = to_csv(&series);
        let back = parse_csv("PROP", &text).unwrap();
        prop_assert_eq!(back, series);
    }
}
