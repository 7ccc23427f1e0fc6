//! Train/test/prediction overlay artifacts: an SVG line chart and the CSV
//! data behind it. The CSV is the testable artifact; the SVG is for eyes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::ExperimentError;
use crate::market_data::{PriceField, PriceSeries};

pub struct PlotArtifacts {
    pub csv_path: PathBuf,
    pub svg_path: PathBuf,
}

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 520.0;
const MARGIN: f64 = 48.0;

/// Write `<stem>.csv` and `<stem>.svg` into `dir`. `predictions[i]` is the
/// one-step-ahead prediction for bar `split + i`; there must be exactly one
/// prediction per test bar.
pub fn emit_plot(
    series: &PriceSeries,
    field: PriceField,
    predictions: &[f64],
    split: usize,
    dir: &Path,
    stem: &str,
) -> Result<PlotArtifacts, ExperimentError> {
    let n = series.len();
    if split == 0 || split >= n {
        return Err(ExperimentError::Alignment(format!(
            "split {split} outside the series of {n} bars"
        )));
    }
    if predictions.len() != n - split {
        return Err(ExperimentError::Alignment(format!(
            "{} predictions for {} test bars",
            predictions.len(),
            n - split
        )));
    }
    std::fs::create_dir_all(dir)?;
    let closes = series.prices(field);

    let mut csv = String::from("date,actual,prediction,partition\n");
    for (i, bar) in series.bars().iter().enumerate() {
        let prediction = if i >= split {
            format!("{}", predictions[i - split])
        } else {
            String::new()
        };
        let partition = if i < split { "train" } else { "test" };
        writeln!(csv, "{},{},{},{}", bar.date, closes[i], prediction, partition)
            .expect("string write");
    }
    let csv_path = dir.join(format!("{stem}.csv"));
    std::fs::write(&csv_path, csv)?;

    let svg_path = dir.join(format!("{stem}.svg"));
    std::fs::write(&svg_path, render_svg(series.symbol(), &closes, predictions, split))?;
    Ok(PlotArtifacts { csv_path, svg_path })
}

fn render_svg(symbol: &str, closes: &[f64], predictions: &[f64], split: usize) -> String {
    let n = closes.len();
    let min = closes
        .iter()
        .chain(predictions)
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let max = closes
        .iter()
        .chain(predictions)
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let span = (max - min).max(1e-9);
    let x = |i: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / (n - 1).max(1) as f64;
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - min) / span;

    let polyline = |points: &mut dyn Iterator<Item = (usize, f64)>, color: &str, dash: &str| {
        let coords: Vec<String> = points
            .map(|(i, v)| format!("{:.2},{:.2}", x(i), y(v)))
            .collect();
        format!(
            r#"  <polyline fill="none" stroke="{color}"{dash} stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        )
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"  <rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"  <text x="{MARGIN}" y="28" font-family="sans-serif" font-size="16">{} one-step-ahead fit (train | test | predicted)</text>"#,
        text_escape(symbol)
    ));
    svg.push('\n');
    // split marker
    svg.push_str(&format!(
        r##"  <line x1="{0:.2}" y1="{MARGIN}" x2="{0:.2}" y2="{1:.2}" stroke="#888888" stroke-dasharray="6 4"/>"##,
        x(split),
        HEIGHT - MARGIN
    ));
    svg.push('\n');
    svg.push_str(&polyline(
        &mut closes[..split].iter().cloned().enumerate(),
        "#1f77b4",
        "",
    ));
    svg.push('\n');
    svg.push_str(&polyline(
        &mut closes[split..]
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, v)| (split + i, v)),
        "#2ca02c",
        "",
    ));
    svg.push('\n');
    svg.push_str(&polyline(
        &mut predictions
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, v)| (split + i, v)),
        "#d62728",
        r#" stroke-dasharray="2 2""#,
    ));
    svg.push('\n');
    svg.push_str("</svg>\n");
    svg
}

fn text_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
