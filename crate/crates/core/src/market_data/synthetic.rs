//! Deterministic synthetic market with a planted momentum effect.
//!
//! A market factor follows `m[t] = momentum * (m[t-1] + ... + m[t-lags]) +
//! volatility * e[t]`, so recent index returns carry information about the
//! next one. The index closes on the factor; each constituent loads on it
//! with its own beta plus idiosyncratic noise. Bars get small random gaps
//! and high/low spreads, and volumes are log-normal.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use super::{Field, PricePanel};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    /// Trading days (weekdays) to generate.
    pub days: usize,
    pub constituents: usize,
    pub start: NaiveDate,
    /// Coefficient on each of the last `lags` factor returns.
    pub momentum: f64,
    pub lags: usize,
    /// Daily stddev of the factor innovation.
    pub volatility: f64,
    /// Daily stddev of constituent-specific noise.
    pub idiosyncratic: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            days: 2500,
            constituents: 10,
            start: NaiveDate::from_ymd_opt(2013, 11, 1).expect("valid date"),
            momentum: 0.15,
            lags: 5,
            volatility: 0.01,
            idiosyncratic: 0.01,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticMarket {
    pub index: PricePanel,
    pub constituents: PricePanel,
}

pub const INDEX_TICKER: &str = "INDEX";

fn weekdays(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

/// Appends one ticker's bars to `cols`, driven by per-day close returns.
fn push_bars(cols: &mut [Vec<f64>; 6], returns: &[f64], start_price: f64, base_volume: f64, rng: &mut SeededRng) {
    let mut prev_close = start_price;
    for &r in returns {
        let open = prev_close * (1.0 + 0.002 * rng.normal());
        let close = prev_close * (1.0 + r);
        let high = open.max(close) * (1.0 + 0.003 * rng.normal().abs());
        let low = open.min(close) * (1.0 - 0.003 * rng.normal().abs());
        let volume = (base_volume * (0.25 * rng.normal()).exp()).round();
        for (f, v) in Field::ALL.iter().zip([open, high, low, close, close, volume]) {
            cols[f.index()].push(v);
        }
        prev_close = close;
    }
}

pub fn generate(config: &SyntheticConfig) -> SyntheticMarket {
    let mut rng = SeededRng::new(config.seed);
    let n = config.days;
    let mut factor = vec![0.0; n];
    for t in 0..n {
        let recent: f64 = factor[t.saturating_sub(config.lags)..t].iter().sum();
        factor[t] = config.momentum * recent + config.volatility * rng.normal();
    }
    let dates = weekdays(config.start, n);

    let mut index_cols: [Vec<f64>; 6] = Default::default();
    push_bars(&mut index_cols, &factor, 1800.0, 3.0e9, &mut rng);
    let index = PricePanel::from_parts(dates.clone(), vec![INDEX_TICKER.to_string()], index_cols)
        .expect("generated columns are aligned");

    let mut cols: [Vec<f64>; 6] = Default::default();
    let mut tickers = Vec::with_capacity(config.constituents);
    for k in 0..config.constituents {
        let beta = 0.6 + 0.8 * rng.uniform();
        let returns: Vec<f64> = factor
            .iter()
            .map(|m| beta * m + config.idiosyncratic * rng.normal())
            .collect();
        let start_price = 20.0 + 180.0 * rng.uniform();
        let base_volume = 1.0e6 * (1.0 + 9.0 * rng.uniform());
        push_bars(&mut cols, &returns, start_price, base_volume, &mut rng);
        tickers.push(format!("S{:03}", k + 1));
    }
    let constituents = PricePanel::from_parts(dates, tickers, cols).expect("generated columns are aligned");
    SyntheticMarket { index, constituents }
}
