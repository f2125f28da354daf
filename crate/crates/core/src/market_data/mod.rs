//! Daily OHLCV panels: ingestion, alignment and preprocessing.
//!
//! A [`PricePanel`] holds one real series per (ticker, field) on a shared,
//! strictly increasing date axis. Missing observations are stored as `NaN`.

mod csv_io;
mod fetch;
pub mod synthetic;

use std::collections::BTreeSet;

use chrono::{Months, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{load_csv, read_csv, write_csv, ColumnSchema};
pub use fetch::{expand_template, fetch_csv, DateRange};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Field {
    Open,
    High,
    Low,
    Close,
    AdjClose,
    Volume,
}

impl Field {
    pub const ALL: [Field; 6] = [
        Field::Open,
        Field::High,
        Field::Low,
        Field::Close,
        Field::AdjClose,
        Field::Volume,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Field::Open => "open",
            Field::High => "high",
            Field::Low => "low",
            Field::Close => "close",
            Field::AdjClose => "adj_close",
            Field::Volume => "volume",
        }
    }
}

/// One daily bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OhlcvBar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub adj_close: f64,
    pub volume: f64,
}

impl OhlcvBar {
    /// Checks the bar's internal consistency. Bars with missing values pass.
    pub fn check(&self) -> std::result::Result<(), String> {
        let prices = [self.open, self.high, self.low, self.close];
        if prices.iter().chain([&self.volume]).any(|v| v.is_nan()) {
            return Ok(());
        }
        if self.low > self.open.min(self.close) {
            return Err(format!("low {} above min(open, close)", self.low));
        }
        if self.high < self.open.max(self.close) {
            return Err(format!("high {} below max(open, close)", self.high));
        }
        if self.volume < 0.0 {
            return Err(format!("negative volume {}", self.volume));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    /// `values[field][ticker * n_dates + t]`.
    values: [Vec<f64>; 6],
}

impl PricePanel {
    /// Builds a single-ticker panel from bars. Bars are sorted by date;
    /// a repeated date is an integrity error.
    pub fn from_bars(ticker: impl Into<String>, mut bars: Vec<OhlcvBar>) -> Result<Self> {
        let ticker = ticker.into();
        bars.sort_by_key(|b| b.date);
        if let Some(w) = bars.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(Error::Integrity(format!(
                "duplicate date {} for {ticker}",
                w[0].date
            )));
        }
        let mut values: [Vec<f64>; 6] = Default::default();
        for bar in &bars {
            values[0].push(bar.open);
            values[1].push(bar.high);
            values[2].push(bar.low);
            values[3].push(bar.close);
            values[4].push(bar.adj_close);
            values[5].push(bar.volume);
        }
        Ok(Self {
            dates: bars.iter().map(|b| b.date).collect(),
            tickers: vec![ticker],
            values,
        })
    }

    /// Builds a panel from raw field matrices laid out ticker-major.
    pub fn from_parts(
        dates: Vec<NaiveDate>,
        tickers: Vec<String>,
        values: [Vec<f64>; 6],
    ) -> Result<Self> {
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Integrity("date axis not strictly increasing".into()));
        }
        let expected = dates.len() * tickers.len();
        if values.iter().any(|v| v.len() != expected) {
            return Err(Error::Integrity(format!(
                "field series must hold {expected} values"
            )));
        }
        Ok(Self {
            dates,
            tickers,
            values,
        })
    }

    /// Outer-joins several panels onto the union of their date axes.
    pub fn merge(panels: &[PricePanel]) -> Result<Self> {
        let axis: BTreeSet<NaiveDate> = panels.iter().flat_map(|p| p.dates.iter().copied()).collect();
        let axis: Vec<NaiveDate> = axis.into_iter().collect();
        let mut tickers = Vec::new();
        for p in panels {
            for t in &p.tickers {
                if tickers.contains(t) {
                    return Err(Error::Integrity(format!("ticker {t} appears twice")));
                }
                tickers.push(t.clone());
            }
        }
        let mut merged = Self::empty(axis, tickers);
        let mut row = 0;
        for p in panels {
            for k in 0..p.n_tickers() {
                merged.fill_row_from(row, p, k);
                row += 1;
            }
        }
        Ok(merged)
    }

    /// Reindexes this panel onto `dates`; dates absent here become missing.
    pub fn align_to(&self, dates: &[NaiveDate]) -> Self {
        let mut out = Self::empty(dates.to_vec(), self.tickers.clone());
        for k in 0..self.n_tickers() {
            out.fill_row_from(k, self, k);
        }
        out
    }

    fn empty(dates: Vec<NaiveDate>, tickers: Vec<String>) -> Self {
        let len = dates.len() * tickers.len();
        Self {
            values: std::array::from_fn(|_| vec![f64::NAN; len]),
            dates,
            tickers,
        }
    }

    fn fill_row_from(&mut self, row: usize, src: &PricePanel, src_row: usize) {
        let n = self.dates.len();
        let mut j = 0;
        for (i, d) in self.dates.iter().enumerate() {
            while j < src.dates.len() && src.dates[j] < *d {
                j += 1;
            }
            if j < src.dates.len() && src.dates[j] == *d {
                for f in 0..6 {
                    self.values[f][row * n + i] = src.values[f][src_row * src.dates.len() + j];
                }
            }
        }
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    pub fn ticker_index(&self, ticker: &str) -> Option<usize> {
        self.tickers.iter().position(|t| t == ticker)
    }

    pub fn series(&self, ticker: usize, field: Field) -> &[f64] {
        let n = self.n_dates();
        &self.values[field.index()][ticker * n..(ticker + 1) * n]
    }

    /// The whole field as a ticker-major matrix.
    pub fn field_matrix(&self, field: Field) -> &[f64] {
        &self.values[field.index()]
    }

    pub fn bar(&self, ticker: usize, t: usize) -> OhlcvBar {
        let at = |f: Field| self.series(ticker, f)[t];
        OhlcvBar {
            date: self.dates[t],
            open: at(Field::Open),
            high: at(Field::High),
            low: at(Field::Low),
            close: at(Field::Close),
            adj_close: at(Field::AdjClose),
            volume: at(Field::Volume),
        }
    }

    /// Extracts one ticker as its own panel.
    pub fn select(&self, ticker: usize) -> Self {
        let n = self.n_dates();
        Self {
            dates: self.dates.clone(),
            tickers: vec![self.tickers[ticker].clone()],
            values: std::array::from_fn(|f| self.values[f][ticker * n..(ticker + 1) * n].to_vec()),
        }
    }

    /// Keeps the dates at positions `range`.
    pub fn slice_dates(&self, range: std::ops::Range<usize>) -> Self {
        let n = self.n_dates();
        let values = std::array::from_fn(|f| {
            (0..self.n_tickers())
                .flat_map(|k| self.values[f][k * n + range.start..k * n + range.end].iter().copied())
                .collect()
        });
        Self {
            dates: self.dates[range.clone()].to_vec(),
            tickers: self.tickers.clone(),
            values,
        }
    }
}

/// Carries the last observation forward over gaps. Gaps before a series'
/// first observation are left missing.
pub fn forward_fill(panel: &PricePanel) -> PricePanel {
    let mut out = panel.clone();
    let n = panel.n_dates();
    if n == 0 {
        return out;
    }
    for field in out.values.iter_mut() {
        for series in field.chunks_mut(n) {
            let mut last = f64::NAN;
            for v in series.iter_mut() {
                if v.is_nan() {
                    *v = last;
                } else {
                    last = *v;
                }
            }
        }
    }
    out
}

/// Drops every date before `first date + warmup_months` and, optionally, the
/// final date.
pub fn trim(panel: &PricePanel, warmup_months: u32, drop_last: bool) -> Result<PricePanel> {
    let Some(&first) = panel.dates.first() else {
        return Err(Error::EmptyPanel("panel has no dates".into()));
    };
    let cutoff = first
        .checked_add_months(Months::new(warmup_months))
        .ok_or_else(|| Error::param("warm-up overflows the calendar"))?;
    let start = panel.dates.partition_point(|d| *d < cutoff);
    let mut end = panel.n_dates();
    if drop_last && end > start {
        end -= 1;
    }
    if start >= end {
        return Err(Error::EmptyPanel(format!(
            "no dates left after a {warmup_months}-month warm-up starting {first}"
        )));
    }
    Ok(panel.slice_dates(start..end))
}

/// `(high + low + close) / 3` for one ticker.
pub fn typical_price(panel: &PricePanel, ticker: usize) -> Vec<f64> {
    let h = panel.series(ticker, Field::High);
    let l = panel.series(ticker, Field::Low);
    let c = panel.series(ticker, Field::Close);
    h.iter()
        .zip(l)
        .zip(c)
        .map(|((h, l), c)| (h + l + c) / 3.0)
        .collect()
}
