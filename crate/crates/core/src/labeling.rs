//! Binary trend labels built from typical-price returns, and the join that
//! pairs them with a feature matrix.

use std::collections::HashMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::market_data::{typical_price, PricePanel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    Short,
    Long,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelParams {
    /// Short-term: label 1 when the percent change exceeds this.
    pub threshold_pct: f64,
    /// Long-term: number of past returns in the percentile benchmark.
    pub lookback: usize,
    /// Long-term: percentile of the benchmark window, in (0, 100].
    pub percentile: f64,
    /// Days ahead the labeled return looks.
    pub horizon: usize,
}

impl Default for LabelParams {
    fn default() -> Self {
        Self {
            threshold_pct: 0.1,
            lookback: 60,
            percentile: 75.0,
            horizon: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelVector {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<u8>,
    pub kind: LabelKind,
    pub params: LabelParams,
}

impl LabelVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1).count()
    }
}

/// `r[t] = (tp[t+h] - tp[t]) / tp[t]` for the first ticker; the last `h`
/// entries are undefined.
pub fn forward_returns(panel: &PricePanel, horizon: usize) -> Vec<f64> {
    let tp = typical_price(panel, 0);
    (0..tp.len())
        .map(|t| match tp.get(t + horizon) {
            Some(next) => (next - tp[t]) / tp[t],
            None => f64::NAN,
        })
        .collect()
}

fn check_horizon(params: &LabelParams) -> Result<()> {
    if params.horizon == 0 {
        return Err(Error::param("label horizon must be at least 1"));
    }
    Ok(())
}

/// Label 1 iff the typical price rises by more than `threshold_pct` percent
/// over the horizon. Dates without a defined forward return are dropped.
pub fn short_term_labels(panel: &PricePanel, params: &LabelParams) -> Result<LabelVector> {
    check_horizon(params)?;
    if panel.n_dates() <= params.horizon {
        return Err(Error::param(format!(
            "short-term labels need more than {} dates",
            params.horizon
        )));
    }
    let r = forward_returns(panel, params.horizon);
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (t, &rt) in r.iter().enumerate() {
        if rt.is_finite() {
            dates.push(panel.dates()[t]);
            values.push(u8::from(rt * 100.0 > params.threshold_pct));
        }
    }
    Ok(LabelVector {
        dates,
        values,
        kind: LabelKind::Short,
        params: *params,
    })
}

/// `ceil(p/100 * n)`-th smallest value (1-based, clamped to `1..=n`).
pub fn nearest_rank(sorted: &[f64], percentile: f64) -> f64 {
    let n = sorted.len();
    let rank = ((percentile / 100.0 * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    sorted[rank - 1]
}

/// Label 1 iff the forward return at `t` exceeds the nearest-rank
/// percentile of the `lookback` returns already realized at `t`
/// (`r[t-h-lookback+1 ..= t-h]`). Dates without a full benchmark window are
/// dropped.
pub fn long_term_labels(panel: &PricePanel, params: &LabelParams) -> Result<LabelVector> {
    check_horizon(params)?;
    if params.lookback == 0 || !(params.percentile > 0.0 && params.percentile <= 100.0) {
        return Err(Error::param("lookback must be >= 1 and percentile in (0, 100]"));
    }
    let h = params.horizon;
    if panel.n_dates() < params.lookback + h + 1 {
        return Err(Error::param(format!(
            "long-term labels need at least {} dates",
            params.lookback + h + 1
        )));
    }
    let r = forward_returns(panel, h);
    let mut dates = Vec::new();
    let mut values = Vec::new();
    let mut window = Vec::with_capacity(params.lookback);
    for t in params.lookback + h - 1..r.len() {
        if !r[t].is_finite() {
            continue;
        }
        let lo = t + 1 - h - params.lookback;
        window.clear();
        window.extend_from_slice(&r[lo..=t - h]);
        if window.iter().any(|x| !x.is_finite()) {
            continue;
        }
        window.sort_by(f64::total_cmp);
        let bench = nearest_rank(&window, params.percentile);
        dates.push(panel.dates()[t]);
        values.push(u8::from(r[t] > bench));
    }
    Ok(LabelVector {
        dates,
        values,
        kind: LabelKind::Long,
        params: *params,
    })
}

/// Inner join on dates over the kept feature columns. Rows with any
/// undefined feature are dropped.
pub fn join(features: &FeatureMatrix, labels: &LabelVector) -> Result<Dataset> {
    let by_date: HashMap<NaiveDate, u8> = labels.dates.iter().copied().zip(labels.values.iter().copied()).collect();
    let kept: Vec<&[f64]> = features.kept().map(|f| f.values.as_slice()).collect();
    let names = features.kept_names();
    let mut dates = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (t, d) in features.dates.iter().enumerate() {
        let Some(&label) = by_date.get(d) else { continue };
        if kept.iter().any(|c| !c[t].is_finite()) {
            continue;
        }
        dates.push(*d);
        x.extend(kept.iter().map(|c| c[t]));
        y.push(label);
    }
    if y.is_empty() {
        return Err(Error::DegenerateData("features and labels share no dates".into()));
    }
    let ds = Dataset::from_flat(names, dates, x, y)?;
    let [neg, pos] = ds.class_counts();
    log::info!("joined {} rows: {pos} positive, {neg} negative", ds.n_rows());
    Ok(ds)
}

pub fn write_labels_csv<W: Write>(labels: &LabelVector, mut out: W) -> Result<()> {
    writeln!(out, "date,label")?;
    for (d, v) in labels.dates.iter().zip(&labels.values) {
        writeln!(out, "{d},{v}")?;
    }
    Ok(())
}

/// Reads `date,label` rows; kind and params are supplied by the caller.
pub fn read_labels_csv<R: Read>(input: R, kind: LabelKind, params: LabelParams) -> Result<LabelVector> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(std::io::Error::other)?.clone();
    for col in ["date", "label"] {
        if !header.iter().any(|h| h == col) {
            return Err(Error::MissingColumn {
                column: col.into(),
                path: None,
            });
        }
    }
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(std::io::Error::other)?;
        let err = |m: String| Error::Row {
            line: i as u64 + 2,
            message: m,
            path: None,
        };
        dates.push(rec[0].parse().map_err(|e: chrono::ParseError| err(e.to_string()))?);
        values.push(match &rec[1] {
            "0" => 0,
            "1" => 1,
            other => return Err(err(format!("label must be 0 or 1, got `{other}`"))),
        });
    }
    Ok(LabelVector {
        dates,
        values,
        kind,
        params,
    })
}
