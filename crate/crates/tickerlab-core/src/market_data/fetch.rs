//! Blocking client for a chart-style daily price endpoint
//! (`GET {base}/v8/finance/chart/{symbol}?period1=..&period2=..&interval=1d`).
//!
//! The client is replayable: point it at any server that speaks the same
//! payload shape, e.g. a local fixture server. [`to_chart_json`] produces that
//! payload from a [`PriceSeries`] so responses can be recorded and served
//! offline.

use chrono::NaiveDate;
use serde::Deserialize;

use super::{MarketDataError, PriceBar, PriceSeries};

pub const DEFAULT_ENDPOINT: &str = "https://query1.finance.yahoo.com";
pub const ENDPOINT_ENV_VAR: &str = "TICKERLAB_ENDPOINT";

#[derive(Deserialize)]
struct ChartEnvelope {
    chart: ChartBody,
}

#[derive(Deserialize)]
struct ChartBody {
    result: Option<Vec<ChartResult>>,
    error: Option<ChartError>,
}

#[derive(Deserialize)]
struct ChartError {
    code: String,
    #[serde(default)]
    description: String,
}

#[derive(Deserialize)]
struct ChartResult {
    #[serde(default)]
    timestamp: Vec<i64>,
    indicators: Indicators,
}

#[derive(Deserialize)]
struct Indicators {
    quote: Vec<QuoteBlock>,
    #[serde(default)]
    adjclose: Vec<AdjCloseBlock>,
}

#[derive(Deserialize)]
struct QuoteBlock {
    open: Vec<Option<f64>>,
    high: Vec<Option<f64>>,
    low: Vec<Option<f64>>,
    close: Vec<Option<f64>>,
    volume: Vec<Option<u64>>,
}

#[derive(Deserialize)]
struct AdjCloseBlock {
    adjclose: Vec<Option<f64>>,
}

fn unix_midnight(date: NaiveDate) -> i64 {
    date.and_hms_opt(0, 0, 0)
        .expect("midnight exists")
        .and_utc()
        .timestamp()
}

/// Fetch daily bars for `symbol` covering [start, end).
pub fn fetch_daily(
    symbol: &str,
    start: NaiveDate,
    end: NaiveDate,
    endpoint: &str,
) -> Result<PriceSeries, MarketDataError> {
    if start >= end {
        return Err(MarketDataError::EmptyRange { start, end });
    }
    let url = format!(
        "{}/v8/finance/chart/{}?period1={}&period2={}&interval=1d",
        endpoint.trim_end_matches('/'),
        symbol,
        unix_midnight(start),
        unix_midnight(end),
    );
    let mut response = match ureq::get(&url).call() {
        Ok(response) => response,
        Err(ureq::Error::StatusCode(404)) => {
            return Err(MarketDataError::SymbolNotFound(symbol.to_string()))
        }
        Err(ureq::Error::StatusCode(code)) => {
            return Err(MarketDataError::NetworkUnavailable(format!(
                "endpoint returned HTTP {code}"
            )))
        }
        Err(err) => return Err(MarketDataError::NetworkUnavailable(err.to_string())),
    };
    let body = response
        .body_mut()
        .read_to_string()
        .map_err(|err| MarketDataError::NetworkUnavailable(err.to_string()))?;
    parse_chart_payload(symbol, &body, start, end)
}

/// Decode a chart payload into a validated series restricted to [start, end).
pub(crate) fn parse_chart_payload(
    symbol: &str,
    body: &str,
    start: NaiveDate,
    end: NaiveDate,
) -> Result<PriceSeries, MarketDataError> {
    let envelope: ChartEnvelope = serde_json::from_str(body)
        .map_err(|err| MarketDataError::MalformedResponse(err.to_string()))?;
    if let Some(error) = envelope.chart.error {
        if error.code.eq_ignore_ascii_case("not found") {
            return Err(MarketDataError::SymbolNotFound(symbol.to_string()));
        }
        return Err(MarketDataError::MalformedResponse(format!(
            "{}: {}",
            error.code, error.description
        )));
    }
    let result = envelope
        .chart
        .result
        .and_then(|mut r| if r.is_empty() { None } else { Some(r.remove(0)) })
        .ok_or_else(|| {
            MarketDataError::MalformedResponse("payload has neither result nor error".to_string())
        })?;
    let quote = result
        .indicators
        .quote
        .first()
        .ok_or_else(|| MarketDataError::MalformedResponse("missing quote block".to_string()))?;
    let n = result.timestamp.len();
    if [&quote.open, &quote.high, &quote.low, &quote.close]
        .iter()
        .any(|v| v.len() != n)
        || quote.volume.len() != n
    {
        return Err(MarketDataError::MalformedResponse(
            "quote arrays disagree with timestamp length".to_string(),
        ));
    }
    let adjclose = result.indicators.adjclose.first();

    let mut bars = Vec::with_capacity(n);
    for i in 0..n {
        let date = chrono::DateTime::from_timestamp(result.timestamp[i], 0)
            .ok_or_else(|| {
                MarketDataError::MalformedResponse(format!(
                    "timestamp {} out of range",
                    result.timestamp[i]
                ))
            })?
            .date_naive();
        if date < start || date >= end {
            continue;
        }
        // rows with missing fields (halts, bad ticks) are dropped whole
        let (open, high, low, close, volume) = match (
            quote.open[i],
            quote.high[i],
            quote.low[i],
            quote.close[i],
            quote.volume[i],
        ) {
            (Some(o), Some(h), Some(l), Some(c), Some(v)) => (o, h, l, c, v),
            _ => continue,
        };
        let adj_close = adjclose.and_then(|a| a.adjclose.get(i).copied().flatten());
        bars.push(PriceBar {
            date,
            open,
            high,
            low,
            close,
            adj_close: adj_close.unwrap_or(close),
            volume,
        });
    }
    if bars.is_empty() {
        return Err(MarketDataError::EmptyRange { start, end });
    }
    PriceSeries::new(symbol, bars).map_err(|err| match err {
        MarketDataError::InvalidSymbol(s) => MarketDataError::InvalidSymbol(s),
        other => MarketDataError::MalformedResponse(other.to_string()),
    })
}

/// Render a series as the chart payload served by the daily endpoint, with
/// timestamps at 00:00 UTC. Inverse of the fetch parser; used to record
/// replayable fixture responses.
pub fn to_chart_json(series: &PriceSeries) -> String {
    let timestamps: Vec<i64> = series.bars().iter().map(|b| unix_midnight(b.date)).collect();
    let collect = |f: fn(&PriceBar) -> f64| -> Vec<f64> { series.bars().iter().map(f).collect() };
    let payload = serde_json::json!({
        "chart": {
            "result": [{
                "meta": {
                    "symbol": series.symbol(),
                    "dataGranularity": "1d",
                },
                "timestamp": timestamps,
                "indicators": {
                    "quote": [{
                        "open": collect(|b| b.open),
                        "high": collect(|b| b.high),
                        "low": collect(|b| b.low),
                        "close": collect(|b| b.close),
                        "volume": series.bars().iter().map(|b| b.volume).collect::<Vec<u64>>(),
                    }],
                    "adjclose": [{
                        "adjclose": collect(|b| b.adj_close),
                    }],
                }
            }],
            "error": null,
        }
    });
    payload.to_string()
}
