//! Offline fixtures: four bundled daily series (2011-01-01 .. 2021-01-01 on
//! the US trading calendar) embedded at compile time so experiments and tests
//! run without network access. See `fixtures/MANIFEST.md` for provenance and
//! regeneration instructions.

use crate::market_data::{parse_csv, MarketDataError, PriceSeries};

pub const BUNDLED: [(&str, &str); 4] = [
    ("MSFT", include_str!("../fixtures/MSFT.csv")),
    ("TSLA", include_str!("../fixtures/TSLA.csv")),
    ("^GSPC", include_str!("../fixtures/GSPC.csv")),
    ("^RUMIC", include_str!("../fixtures/RUMIC.csv")),
];

pub fn bundled_symbols() -> Vec<&'static str> {
    BUNDLED.iter().map(|(symbol, _)| *symbol).collect()
}

pub fn bundled_csv(symbol: &str) -> Option<&'static str> {
    BUNDLED
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(symbol))
        .map(|(_, text)| *text)
}

pub fn bundled_series(symbol: &str) -> Result<PriceSeries, MarketDataError> {
    let text =
        bundled_csv(symbol).ok_or_else(|| MarketDataError::SymbolNotFound(symbol.to_string()))?;
    let canonical = BUNDLED
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(symbol))
        .map(|(name, _)| *name)
        .expect("just found");
    parse_csv(canonical, text)
}
