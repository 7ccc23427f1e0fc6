//! CSV codec for daily price history in the usual seven-column export layout
//! (Date, Open, High, Low, Close, Adj Close, Volume). Header matching is
//! case-insensitive and order-flexible; parsing validates, it never repairs.

use chrono::NaiveDate;

use super::{BarIssue, MarketDataError, PriceBar, PriceSeries};

const COLUMNS: [&str; 7] = ["date", "open", "high", "low", "close", "adj close", "volume"];
const CANONICAL: [&str; 7] = ["Date", "Open", "High", "Low", "Close", "Adj Close", "Volume"];

fn clean(field: &str) -> &str {
    field.trim().trim_matches('"')
}

/// Parse a CSV document into a validated series for `symbol`.
pub fn parse_csv(symbol: &str, text: &str) -> Result<PriceSeries, MarketDataError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(MarketDataError::MissingColumn("Date"))?;
    let names: Vec<String> = header
        .split(',')
        .map(|f| clean(f).to_ascii_lowercase())
        .collect();
    let mut positions = [0usize; 7];
    for (slot, wanted) in COLUMNS.iter().enumerate() {
        positions[slot] = names
            .iter()
            .position(|n| n == wanted)
            .ok_or(MarketDataError::MissingColumn(CANONICAL[slot]))?;
    }

    let mut bars: Vec<PriceBar> = Vec::new();
    for (index, raw) in lines {
        let line = index + 1; // 1-based file line number
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(clean).collect();
        if fields.len() < names.len() {
            return Err(MarketDataError::MalformedRow {
                line,
                reason: format!("expected {} fields, found {}", names.len(), fields.len()),
            });
        }
        let date: NaiveDate = fields[positions[0]].parse().map_err(|_| {
            MarketDataError::MalformedRow {
                line,
                reason: format!("invalid ISO date {:?}", fields[positions[0]]),
            }
        })?;
        let mut prices = [0.0f64; 4];
        for (i, price) in prices.iter_mut().enumerate() {
            let field = fields[positions[1 + i]];
            *price = field.parse().map_err(|_| MarketDataError::MalformedRow {
                line,
                reason: format!("invalid price {field:?}"),
            })?;
        }
        let adj_close: f64 =
            fields[positions[5]]
                .parse()
                .map_err(|_| MarketDataError::MalformedRow {
                    line,
                    reason: format!("invalid price {:?}", fields[positions[5]]),
                })?;
        let volume: u64 =
            fields[positions[6]]
                .parse()
                .map_err(|_| MarketDataError::MalformedRow {
                    line,
                    reason: format!("invalid volume {:?}", fields[positions[6]]),
                })?;
        let bar = PriceBar {
            date,
            open: prices[0],
            high: prices[1],
            low: prices[2],
            close: prices[3],
            adj_close,
            volume,
        };
        match bar.check() {
            Ok(()) => {}
            Err(BarIssue::NonPositivePrice) => {
                return Err(MarketDataError::NonPositivePrice { line })
            }
            Err(BarIssue::InconsistentRange) => {
                return Err(MarketDataError::MalformedRow {
                    line,
                    reason: "high/low outside the open/close range".to_string(),
                })
            }
        }
        if let Some(previous) = bars.last() {
            if previous.date >= bar.date {
                return Err(MarketDataError::NonMonotonicDates { line });
            }
        }
        bars.push(bar);
    }
    PriceSeries::new(symbol, bars)
}

/// Serialize in canonical column order. `parse_csv(to_csv(s))` reproduces `s`
/// bit-exactly: floats are written in shortest round-trip form.
pub fn to_csv(series: &PriceSeries) -> String {
    let mut out = String::from("Date,Open,High,Low,Close,Adj Close,Volume\n");
    for bar in series.bars() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            bar.date, bar.open, bar.high, bar.low, bar.close, bar.adj_close, bar.volume
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_ROWS: &str = "Date,Open,High,Low,Close,Adj Close,Volume\n\
        2011-01-03,10.0,11.0,9.5,10.5,10.4,12000\n\
        2011-01-04,10.5,10.9,10.1,10.2,10.1,9000\n";

    #[test]
    fn well_formed_two_row_file() {
        let series = parse_csv("MSFT", TWO_ROWS).unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!(series.closing_prices(), vec![10.5, 10.2]);
    }

    #[test]
    fn header_order_and_case_are_flexible() {
        let text = "volume,close,DATE,open,HIGH,low,Adj Close\n\
            12000,10.5,2011-01-03,10.0,11.0,9.5,10.4\n";
        let series = parse_csv("MSFT", text).unwrap();
        assert_eq!(series.bars()[0].close, 10.5);
        assert_eq!(series.bars()[0].volume, 12_000);
    }

    #[test]
    fn missing_column_named_in_error() {
        let text = "Date,Open,High,Low,Close,Volume\n";
        assert_eq!(
            parse_csv("MSFT", text).unwrap_err(),
            MarketDataError::MissingColumn("Adj Close")
        );
    }

    #[test]
    fn out_of_order_dates_rejected_with_line() {
        let text = "Date,Open,High,Low,Close,Adj Close,Volume\n\
            2011-01-04,10.0,11.0,9.5,10.5,10.4,12000\n\
            2011-01-03,10.0,11.0,9.5,10.5,10.4,12000\n";
        assert_eq!(
            parse_csv("MSFT", text).unwrap_err(),
            MarketDataError::NonMonotonicDates { line: 3 }
        );
    }

    #[test]
    fn negative_close_rejected_with_line() {
        let text = "Date,Open,High,Low,Close,Adj Close,Volume\n\
            2011-01-03,10.0,11.0,-9.5,-1.0,10.4,12000\n";
        assert_eq!(
            parse_csv("MSFT", text).unwrap_err(),
            MarketDataError::NonPositivePrice { line: 2 }
        );
    }

    #[test]
    fn short_row_rejected() {
        let text = "Date,Open,High,Low,Close,Adj Close,Volume\n2011-01-03,10.0\n";
        assert!(matches!(
            parse_csv("MSFT", text).unwrap_err(),
            MarketDataError::MalformedRow { line: 2, .. }
        ));
    }

    #[test]
    fn garbage_date_rejected() {
        let text = "Date,Open,High,Low,Close,Adj Close,Volume\n\
            03/01/2011,10.0,11.0,9.5,10.5,10.4,12000\n";
        assert!(matches!(
            parse_csv("MSFT", text).unwrap_err(),
            MarketDataError::MalformedRow { line: 2, .. }
        ));
    }

    #[test]
    fn round_trip_is_identity() {
        let series = parse_csv("MSFT", TWO_ROWS).unwrap();
        let rendered = to_csv(&series);
        let back = parse_csv("MSFT", &rendered).unwrap();
        assert_eq!(back, series);
    }

    #[test]
    fn round_trip_survives_awkward_floats() {
        let series = PriceSeries::new(
            "TSLA",
            vec![PriceBar {
                date: "2011-01-03".parse().unwrap(),
                open: 0.1 + 0.2,
                high: 0.34,
                low: 0.29,
                close: 1.0 / 3.0,
                adj_close: 0.3333333333333333,
                volume: u64::MAX,
            }],
        )
        .unwrap();
        let back = parse_csv("TSLA", &to_csv(&series)).unwrap();
        assert_eq!(back, series);
    }
}
