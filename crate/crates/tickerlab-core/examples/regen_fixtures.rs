//! Regenerates the bundled offline fixtures under `fixtures/`.
//!
//! Each fixture is a deterministic synthetic daily series on the US trading
//! calendar for 2011-01-01 .. 2021-01-01. Level anchors give each symbol its
//! long-run shape (growth, crash, late rally); an AR(1) disturbance on log
//! returns sets its volatility and short-horizon structure. See
//! `fixtures/MANIFEST.md` for the per-symbol parameters.
//!
//! Usage: cargo run -p tickerlab-core --example regen_fixtures

use std::path::PathBuf;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use tickerlab_core::market_data::{to_csv, PriceBar, PriceSeries};
use tickerlab_core::rng::Rng;

fn easter(year: i32) -> NaiveDate {
    // anonymous Gregorian computus
    let a = year % 19;
    let b = year / 100;
    let c = year % 100;
    let d = b / 4;
    let e = b % 4;
    let f = (b + 8) / 25;
    let g = (b - f + 1) / 3;
    let h = (19 * a + b - d - g + 15) % 30;
    let i = c / 4;
    let k = c % 4;
    let l = (32 + 2 * e + 2 * i - h - k) % 7;
    let m = (a + 11 * h + 22 * l) / 451;
    let month = (h + l - 7 * m + 114) / 31;
    let day = (h + l - 7 * m + 114) % 31 + 1;
    NaiveDate::from_ymd_opt(year, month as u32, day as u32).expect("computus stays in range")
}

fn nth_weekday(year: i32, month: u32, weekday: Weekday, n: u32) -> NaiveDate {
    let first = NaiveDate::from_ymd_opt(year, month, 1).unwrap();
    let offset = (7 + weekday.num_days_from_monday() as i64
        - first.weekday().num_days_from_monday() as i64)
        % 7;
    first + Duration::days(offset + 7 * (n as i64 - 1))
}

fn last_weekday(year: i32, month: u32, weekday: Weekday) -> NaiveDate {
    let next_month = if month == 12 {
        NaiveDate::from_ymd_opt(year + 1, 1, 1).unwrap()
    } else {
        NaiveDate::from_ymd_opt(year, month + 1, 1).unwrap()
    };
    let mut day = next_month - Duration::days(1);
    while day.weekday() != weekday {
        day -= Duration::days(1);
    }
    day
}

/// Saturday holidays are observed the Friday before, Sunday holidays the
/// Monday after. A Saturday New Year's Day is not observed at all (the Friday
/// would fall in the prior year).
fn observed(date: NaiveDate, skip_saturday: bool) -> Option<NaiveDate> {
    match date.weekday() {
        Weekday::Sat => {
            if skip_saturday {
                None
            } else {
                Some(date - Duration::days(1))
            }
        }
        Weekday::Sun => Some(date + Duration::days(1)),
        _ => Some(date),
    }
}

fn market_holidays(year: i32) -> Vec<NaiveDate> {
    let mut days = Vec::new();
    let fixed = |m: u32, d: u32| NaiveDate::from_ymd_opt(year, m, d).unwrap();
    if let Some(day) = observed(fixed(1, 1), true) {
        days.push(day);
    }
    days.push(nth_weekday(year, 1, Weekday::Mon, 3)); // Martin Luther King Jr.
    days.push(nth_weekday(year, 2, Weekday::Mon, 3)); // Washington's Birthday
    days.push(easter(year) - Duration::days(2)); // Good Friday
    days.push(last_weekday(year, 5, Weekday::Mon)); // Memorial Day
    if let Some(day) = observed(fixed(7, 4), false) {
        days.push(day);
    }
    days.push(nth_weekday(year, 9, Weekday::Mon, 1)); // Labor Day
    days.push(nth_weekday(year, 11, Weekday::Thu, 4)); // Thanksgiving
    if let Some(day) = observed(fixed(12, 25), false) {
        days.push(day);
    }
    days
}

/// Unscheduled closures inside the fixture range: Hurricane Sandy and the
/// December 2018 national day of mourning.
const SPECIAL_CLOSURES: [(i32, u32, u32); 3] = [(2012, 10, 29), (2012, 10, 30), (2018, 12, 5)];

fn trading_days(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    let closures: Vec<NaiveDate> = SPECIAL_CLOSURES
        .iter()
        .map(|(y, m, d)| NaiveDate::from_ymd_opt(*y, *m, *d).unwrap())
        .collect();
    let mut holidays = Vec::new();
    for year in start.year()..=end.year() {
        holidays.extend(market_holidays(year));
    }
    let mut days = Vec::new();
    let mut day = start;
    while day < end {
        let weekend = matches!(day.weekday(), Weekday::Sat | Weekday::Sun);
        if !weekend && !holidays.contains(&day) && !closures.contains(&day) {
            days.push(day);
        }
        day += Duration::days(1);
    }
    days
}

struct SymbolProfile {
    symbol: &'static str,
    file: &'static str,
    seed: u64,
    /// (position in [0,1] along the series, close level) control points
    anchors: &'static [(f64, f64)],
    /// daily log-return noise scale
    sigma: f64,
    /// AR(1) coefficient of the return disturbance
    momentum: f64,
    /// pull of the log level back toward the anchor path (close to 1)
    reversion: f64,
    base_volume: f64,
    /// adjusted close starts at close * this factor and ramps to 1.0
    adj_start_factor: f64,
}

fn log_anchor_level(anchors: &[(f64, f64)], position: f64) -> f64 {
    let mut previous = anchors[0];
    for &next in &anchors[1..] {
        if position <= next.0 {
            let span = (next.0 - previous.0).max(1e-12);
            let w = (position - previous.0) / span;
            return previous.1.ln() * (1.0 - w) + next.1.ln() * w;
        }
        previous = next;
    }
    anchors.last().unwrap().1.ln()
}

fn generate(profile: &SymbolProfile, days: &[NaiveDate]) -> PriceSeries {
    let mut rng = Rng::seeded(profile.seed);
    let n = days.len();
    let mut closes = Vec::with_capacity(n);
    // The log price is the anchor backbone plus a bounded deviation: the
    // deviation integrates AR(1) momentum noise but decays back toward the
    // backbone, so the realized path keeps the intended decade shape.
    let mut noise = 0.0;
    let mut deviation = 0.0;
    closes.push(log_anchor_level(profile.anchors, 0.0).exp());
    for t in 1..n {
        let position = t as f64 / (n - 1) as f64;
        noise = profile.momentum * noise + profile.sigma * rng.normal();
        deviation = profile.reversion * deviation + noise;
        closes.push((log_anchor_level(profile.anchors, position) + deviation).exp());
    }

    let round = |v: f64| (v * 10_000.0).round() / 10_000.0;
    let mut bars = Vec::with_capacity(n);
    for (t, day) in days.iter().enumerate() {
        let close = closes[t];
        let previous = if t == 0 { close } else { closes[t - 1] };
        let open = previous * (1.0 + 0.3 * profile.sigma * rng.normal());
        let spread_up = (0.5 * profile.sigma * rng.normal()).abs();
        let spread_down = (0.5 * profile.sigma * rng.normal()).abs();
        let high = open.max(close) * (1.0 + spread_up);
        let low = open.min(close) * (1.0 - spread_down);
        let position = t as f64 / (n - 1) as f64;
        let adj_factor = profile.adj_start_factor + (1.0 - profile.adj_start_factor) * position;
        let volume = profile.base_volume * (1.0 + 0.35 * rng.normal()).clamp(0.2, 3.0);
        bars.push(PriceBar {
            date: *day,
            open: round(open),
            high: round(high),
            low: round(low),
            close: round(close),
            adj_close: round(close * adj_factor),
            volume: volume as u64,
        });
    }
    PriceSeries::new(profile.symbol, bars).expect("generated bars satisfy the invariants")
}

fn profiles() -> Vec<SymbolProfile> {
    vec![
        SymbolProfile {
            symbol: "MSFT",
            file: "MSFT.csv",
            seed: 0x4D53_4654,
            anchors: &[
                (0.0, 28.0),
                (0.18, 25.0),
                (0.40, 41.0),
                (0.60, 66.0),
                (0.73, 118.0),
                (0.75, 112.0),
                (0.90, 138.0),
                (0.925, 118.0),
                (1.0, 142.0),
            ],
            sigma: 0.012,
            momentum: 0.15,
            reversion: 0.975,
            base_volume: 45_000_000.0,
            adj_start_factor: 0.84,
        },
        SymbolProfile {
            symbol: "TSLA",
            file: "TSLA.csv",
            seed: 0x5453_4C41,
            anchors: &[
                (0.0, 5.6),
                (0.30, 7.4),
                (0.50, 15.0),
                (0.70, 23.5),
                (0.75, 20.0),
                (0.86, 18.5),
                (0.93, 21.5),
                (1.0, 27.0),
            ],
            sigma: 0.032,
            momentum: 0.45,
            reversion: 0.96,
            base_volume: 90_000_000.0,
            adj_start_factor: 1.0,
        },
        SymbolProfile {
            symbol: "^GSPC",
            file: "GSPC.csv",
            seed: 0x4753_5043,
            anchors: &[
                (0.0, 1257.0),
                (0.20, 1360.0),
                (0.45, 1960.0),
                (0.65, 2420.0),
                (0.73, 2930.0),
                (0.75, 2850.0),
                (0.89, 3330.0),
                (0.92, 2480.0),
                (1.0, 3450.0),
            ],
            sigma: 0.010,
            momentum: 0.12,
            reversion: 0.975,
            base_volume: 3_900_000_000.0,
            adj_start_factor: 1.0,
        },
        SymbolProfile {
            symbol: "^RUMIC",
            file: "RUMIC.csv",
            seed: 0x5255_4D49,
            anchors: &[
                (0.0, 380.0),
                (0.25, 420.0),
                (0.50, 560.0),
                (0.70, 690.0),
                (0.75, 665.0),
                (0.86, 640.0),
                (0.92, 470.0),
                (1.0, 870.0),
            ],
            sigma: 0.018,
            momentum: 0.40,
            reversion: 0.96,
            base_volume: 250_000_000.0,
            adj_start_factor: 1.0,
        },
    ]
}

fn main() {
    let out_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(&out_dir).expect("fixtures directory");
    let days = trading_days(
        NaiveDate::from_ymd_opt(2011, 1, 1).unwrap(),
        NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(),
    );
    println!("trading days 2011-01-01 .. 2021-01-01: {}", days.len());
    for profile in profiles() {
        let series = generate(&profile, &days);
        let path = out_dir.join(profile.file);
        std::fs::write(&path, to_csv(&series)).expect("write fixture");
        let closes = series.closing_prices();
        println!(
            "{:8} {} bars, close range [{:.2}, {:.2}], wrote {}",
            profile.symbol,
            series.len(),
            closes.iter().cloned().fold(f64::INFINITY, f64::min),
            closes.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            path.display()
        );
    }
}
