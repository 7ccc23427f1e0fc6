//! Daily OHLCV price series: validated domain types, a CSV codec matching the
//! common daily-history export layout, and a thin client for chart endpoints.

mod csv;
mod fetch;

pub use csv::{parse_csv, to_csv};
pub use fetch::{fetch_daily, to_chart_json, DEFAULT_ENDPOINT, ENDPOINT_ENV_VAR};

use chrono::NaiveDate;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MarketDataError {
    #[error("required column {0:?} is missing from the header")]
    MissingColumn(&'static str),
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: dates must be strictly increasing")]
    NonMonotonicDates { line: usize },
    #[error("line {line}: prices must be strictly positive")]
    NonPositivePrice { line: usize },
    #[error("invalid ticker symbol {0:?}")]
    InvalidSymbol(String),
    #[error("a price series must contain at least one bar")]
    EmptySeries,
    #[error("date range [{start}, {end}) selects no data")]
    EmptyRange { start: NaiveDate, end: NaiveDate },
    #[error("network unavailable: {0}")]
    NetworkUnavailable(String),
    #[error("symbol {0:?} not found")]
    SymbolNotFound(String),
    #[error("malformed chart response: {0}")]
    MalformedResponse(String),
}

/// What a single bar can get wrong, independent of its position.
#[derive(Debug, Clone, Copy, PartialEq)]
enum BarIssue {
    NonPositivePrice,
    InconsistentRange,
}

/// One trading day of open/high/low/close/adjusted-close prices and volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceBar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub adj_close: f64,
    pub volume: u64,
}

impl PriceBar {
    fn check(&self) -> Result<(), BarIssue> {
        let prices = [self.open, self.high, self.low, self.close, self.adj_close];
        if prices.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(BarIssue::NonPositivePrice);
        }
        if self.low > self.open.min(self.close) || self.high < self.open.max(self.close) {
            return Err(BarIssue::InconsistentRange);
        }
        Ok(())
    }
}

/// Which per-day price the models consume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriceField {
    #[default]
    Close,
    AdjClose,
}

/// Ordered, validated daily bars for one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    symbol: String,
    bars: Vec<PriceBar>,
}

impl PriceSeries {
    /// Validates the symbol, every bar and the strict date ordering.
    pub fn new(symbol: &str, bars: Vec<PriceBar>) -> Result<PriceSeries, MarketDataError> {
        if symbol.is_empty()
            || symbol.len() > 10
            || !symbol
                .chars()
                .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || "^.-=".contains(c))
        {
            return Err(MarketDataError::InvalidSymbol(symbol.to_string()));
        }
        if bars.is_empty() {
            return Err(MarketDataError::EmptySeries);
        }
        for (index, bar) in bars.iter().enumerate() {
            match bar.check() {
                Ok(()) => {}
                Err(BarIssue::NonPositivePrice) => {
                    return Err(MarketDataError::NonPositivePrice { line: index + 2 })
                }
                Err(BarIssue::InconsistentRange) => {
                    return Err(MarketDataError::MalformedRow {
                        line: index + 2,
                        reason: "high/low outside the open/close range".to_string(),
                    })
                }
            }
            if index > 0 && bars[index - 1].date >= bar.date {
                return Err(MarketDataError::NonMonotonicDates { line: index + 2 });
            }
        }
        Ok(PriceSeries {
            symbol: symbol.to_string(),
            bars,
        })
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn bars(&self) -> &[PriceBar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    /// Closing prices in bar order (or adjusted closes, by field).
    pub fn prices(&self, field: PriceField) -> Vec<f64> {
        self.bars
            .iter()
            .map(|b| match field {
                PriceField::Close => b.close,
                PriceField::AdjClose => b.adj_close,
            })
            .collect()
    }

    /// Closing prices in bar order.
    pub fn closing_prices(&self) -> Vec<f64> {
        self.prices(PriceField::Close)
    }

    /// Bars with start <= date < end; errors when the selection is empty.
    pub fn slice_range(
        &self,
        start: NaiveDate,
        end: NaiveDate,
    ) -> Result<PriceSeries, MarketDataError> {
        let bars: Vec<PriceBar> = self
            .bars
            .iter()
            .filter(|b| b.date >= start && b.date < end)
            .copied()
            .collect();
        if bars.is_empty() {
            return Err(MarketDataError::EmptyRange { start, end });
        }
        Ok(PriceSeries {
            symbol: self.symbol.clone(),
            bars,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn bar(date: &str, close: f64) -> PriceBar {
        let date = date.parse().unwrap();
        PriceBar {
            date,
            open: close * 0.99,
            high: close * 1.02,
            low: close * 0.97,
            close,
            adj_close: close,
            volume: 1_000,
        }
    }

    #[test]
    fn closing_prices_project_in_order() {
        let series =
            PriceSeries::new("MSFT", vec![bar("2011-01-03", 1.0), bar("2011-01-04", 2.0)]).unwrap();
        assert_eq!(series.closing_prices(), vec![1.0, 2.0]);
    }

    #[test]
    fn single_bar_series_is_valid() {
        let series = PriceSeries::new("MSFT", vec![bar("2011-01-03", 5.0)]).unwrap();
        assert_eq!(series.closing_prices().len(), 1);
    }

    #[test]
    fn duplicate_dates_rejected() {
        let err = PriceSeries::new("MSFT", vec![bar("2011-01-03", 1.0), bar("2011-01-03", 2.0)])
            .unwrap_err();
        assert_eq!(err, MarketDataError::NonMonotonicDates { line: 3 });
    }

    #[test]
    fn lowercase_symbol_rejected() {
        assert!(matches!(
            PriceSeries::new("msft", vec![bar("2011-01-03", 1.0)]),
            Err(MarketDataError::InvalidSymbol(_))
        ));
    }

    #[test]
    fn index_symbols_accepted() {
        assert!(PriceSeries::new("^GSPC", vec![bar("2011-01-03", 1.0)]).is_ok());
    }

    #[test]
    fn slice_range_selects_half_open_interval() {
        let bars: Vec<PriceBar> = (3..13)
            .map(|d| bar(&format!("2011-01-{d:02}"), d as f64))
            .collect();
        let series = PriceSeries::new("MSFT", bars).unwrap();
        let sliced = series
            .slice_range("2011-01-06".parse().unwrap(), "2011-01-09".parse().unwrap())
            .unwrap();
        assert_eq!(sliced.closing_prices(), vec![6.0, 7.0, 8.0]);

        let full = series
            .slice_range("2011-01-01".parse().unwrap(), "2012-01-01".parse().unwrap())
            .unwrap();
        assert_eq!(&full, &series);
    }

    #[test]
    fn slice_before_first_date_is_empty_range() {
        let series = PriceSeries::new("MSFT", vec![bar("2011-01-03", 1.0)]).unwrap();
        assert!(matches!(
            series.slice_range("2010-01-01".parse().unwrap(), "2010-06-01".parse().unwrap()),
            Err(MarketDataError::EmptyRange { .. })
        ));
    }

    #[test]
    fn slicing_commutes_with_closing_prices() {
        let bars: Vec<PriceBar> = (3..23)
            .map(|d| bar(&format!("2011-01-{d:02}"), d as f64))
            .collect();
        let series = PriceSeries::new("MSFT", bars).unwrap();
        let start: NaiveDate = "2011-01-08".parse().unwrap();
        let end: NaiveDate = "2011-01-15".parse().unwrap();
        let sliced = series.slice_range(start, end).unwrap().closing_prices();
        let full = series.closing_prices();
        assert_eq!(sliced.as_slice(), &full[5..12]);
    }
}
