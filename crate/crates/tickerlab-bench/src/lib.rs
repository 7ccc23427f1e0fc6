//! Shared inputs for the benchmark targets.

use tickerlab_core::rng::Rng;

/// A deterministic geometric random walk of `n` closing prices.
pub fn synthetic_closes(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = Rng::seeded(seed);
    let mut prices = Vec::with_capacity(n);
    let mut level: f64 = 100.0;
    for _ in 0..n {
        level *= 1.0 + 0.0003 + 0.015 * rng.normal();
        prices.push(level);
    }
    prices
}
