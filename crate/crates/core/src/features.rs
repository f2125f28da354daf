//! Alpha catalog evaluation into a date x feature matrix, and the filtering
//! passes applied before modeling: categorical/continuous split, duplication
//! filter, correlation pruning and z-score standardization.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alpha::{evaluate_with, functions, Catalog, EvalOptions};
use crate::error::{Error, Result};
use crate::market_data::PricePanel;

pub const DEFAULT_UNIQUE_THRESHOLD: usize = 10;
pub const DEFAULT_DUPLICATION_THRESHOLD: f64 = 0.20;
pub const DEFAULT_CORRELATION_THRESHOLD: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Categorical,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Duplication,
    Correlation,
    AllUndefined,
    /// Zero spread over the standardization fit range.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub mean: f64,
    pub stddev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMeta {
    pub name: String,
    pub kind: FeatureKind,
    pub unique_count: usize,
    pub duplication_ratio: f64,
    pub kept: bool,
    pub drop_reason: Option<DropReason>,
    pub scaling: Option<Scaling>,
}

impl FeatureMeta {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            kind: FeatureKind::Continuous,
            unique_count: 0,
            duplication_ratio: 0.0,
            kept: true,
            drop_reason: None,
            scaling: None,
        }
    }
}

/// One column. Dropped features keep their metadata but not their values.
#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub meta: FeatureMeta,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub dates: Vec<NaiveDate>,
    /// Every catalog entry in catalog order, kept or dropped.
    pub features: Vec<Feature>,
    /// Inclusive date range the standardization was fitted on.
    pub fit_range: Option<(NaiveDate, NaiveDate)>,
}

impl FeatureMatrix {
    /// Builds a matrix from raw columns, all kept.
    pub fn from_columns(dates: Vec<NaiveDate>, columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if let Some((name, c)) = columns.iter().find(|(_, c)| c.len() != dates.len()) {
            return Err(Error::param(format!(
                "column `{name}` has {} values for {} dates",
                c.len(),
                dates.len()
            )));
        }
        let mut m = Self {
            dates,
            features: columns
                .into_iter()
                .map(|(name, values)| Feature {
                    meta: FeatureMeta::new(&name),
                    values,
                })
                .collect(),
            fit_range: None,
        };
        m.describe(DEFAULT_UNIQUE_THRESHOLD);
        Ok(m)
    }

    pub fn kept(&self) -> impl Iterator<Item = &Feature> {
        self.features.iter().filter(|f| f.meta.kept)
    }

    pub fn kept_names(&self) -> Vec<String> {
        self.kept().map(|f| f.meta.name.clone()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.kept().find(|f| f.meta.name == name).map(|f| f.values.as_slice())
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    fn drop_feature(&mut self, i: usize, reason: DropReason) {
        let f = &mut self.features[i];
        f.meta.kept = false;
        f.meta.drop_reason = Some(reason);
        f.values = Vec::new();
    }

    /// Recomputes kind, unique count and duplication ratio of kept columns.
    pub fn describe(&mut self, unique_threshold: usize) {
        for f in self.features.iter_mut().filter(|f| f.meta.kept) {
            let unique = unique_count(&f.values);
            f.meta.unique_count = unique;
            f.meta.kind = kind_for(unique, unique_threshold);
            f.meta.duplication_ratio = duplication_ratio(&f.values);
        }
    }

    /// Drops the leading dates on which some kept column is not yet defined,
    /// then carries each column's last defined value over later gaps.
    pub fn drop_warmup_and_fill(&mut self) {
        let start = self
            .kept()
            .map(|f| f.values.iter().position(|v| v.is_finite()).unwrap_or(f.values.len()))
            .max()
            .unwrap_or(0);
        self.dates.drain(..start.min(self.dates.len()));
        for f in self.features.iter_mut().filter(|f| f.meta.kept) {
            f.values.drain(..start.min(f.values.len()));
            let mut filled = 0;
            let mut last = f64::NAN;
            for v in f.values.iter_mut() {
                if v.is_finite() {
                    last = *v;
                } else {
                    *v = last;
                    filled += 1;
                }
            }
            if filled > 0 {
                log::info!("feature `{}`: {filled} undefined values carried forward", f.meta.name);
            }
        }
    }
}

/// How a cross-sectional alpha evaluated over constituents becomes one
/// index-level series.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy)]
pub struct FeatureOptions {
    pub eval: EvalOptions,
    pub reduction: Reduction,
    pub unique_threshold: usize,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self {
            eval: EvalOptions::default(),
            reduction: Reduction::Mean,
            unique_threshold: DEFAULT_UNIQUE_THRESHOLD,
        }
    }
}

fn reduce(grid: &crate::alpha::Grid, reduction: Reduction) -> Vec<f64> {
    match reduction {
        Reduction::Mean => grid.cross_sectional_mean(),
        Reduction::Median => (0..grid.dates)
            .map(|t| {
                let mut xs: Vec<f64> = (0..grid.instruments)
                    .map(|k| grid.get(k, t))
                    .filter(|v| v.is_finite())
                    .collect();
                if xs.is_empty() {
                    return f64::NAN;
                }
                xs.sort_by(f64::total_cmp);
                let m = xs.len() / 2;
                if xs.len() % 2 == 1 {
                    xs[m]
                } else {
                    (xs[m - 1] + xs[m]) / 2.0
                }
            })
            .collect(),
    }
}

/// Evaluates every catalog entry into an index-level column.
///
/// Expressions without cross-sectional operators run on `index` (first
/// ticker). Expressions with them run on `constituents`, reindexed onto the
/// index dates, and are reduced per date. Columns that are never defined are
/// dropped; then leading warm-up dates are removed and later undefined
/// values take the column's previous value.
pub fn compute_features(
    index: &PricePanel,
    constituents: Option<&PricePanel>,
    catalog: &Catalog,
    options: &FeatureOptions,
) -> Result<FeatureMatrix> {
    if catalog.is_empty() {
        return Err(Error::param("alpha catalog is empty"));
    }
    if index.n_tickers() == 0 {
        return Err(Error::EmptyPanel("index panel has no ticker".into()));
    }
    let cs_names = functions::cross_sectional_names();
    let aligned = constituents.map(|c| c.align_to(index.dates()));
    let columns: Vec<Result<Vec<f64>>> = catalog
        .alphas
        .par_iter()
        .map(|alpha| {
            let wrap = |e: Error| Error::Alpha {
                name: alpha.name.clone(),
                source: Box::new(e),
            };
            match (&aligned, alpha.expr.calls_any(&cs_names)) {
                (Some(panel), true) => {
                    let grid = evaluate_with(&alpha.expr, panel, options.eval).map_err(wrap)?;
                    Ok(reduce(&grid, options.reduction))
                }
                _ => {
                    let grid = evaluate_with(&alpha.expr, &index.select(0), options.eval).map_err(wrap)?;
                    Ok(grid.row(0).to_vec())
                }
            }
        })
        .collect();

    let mut features = Vec::with_capacity(columns.len());
    for (alpha, col) in catalog.alphas.iter().zip(columns) {
        features.push(Feature {
            meta: FeatureMeta::new(&alpha.name),
            values: col?,
        });
    }
    let mut m = FeatureMatrix {
        dates: index.dates().to_vec(),
        features,
        fit_range: None,
    };
    for i in 0..m.features.len() {
        if m.features[i].values.iter().all(|v| !v.is_finite()) {
            log::warn!("feature `{}` is never defined; dropped", m.features[i].meta.name);
            m.drop_feature(i, DropReason::AllUndefined);
        }
    }
    m.drop_warmup_and_fill();
    m.describe(options.unique_threshold);
    Ok(m)
}

fn key(v: f64) -> u64 {
    // +0 and -0 count as one value.
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

pub fn unique_count(column: &[f64]) -> usize {
    column.iter().filter(|v| v.is_finite()).map(|v| key(*v)).collect::<HashSet<_>>().len()
}

/// `(n - unique) / n` over the defined entries; 0 for an empty column.
pub fn duplication_ratio(column: &[f64]) -> f64 {
    let n = column.iter().filter(|v| v.is_finite()).count();
    if n == 0 {
        return 0.0;
    }
    (n - unique_count(column)) as f64 / n as f64
}

fn kind_for(unique: usize, threshold: usize) -> FeatureKind {
    if unique < threshold {
        FeatureKind::Categorical
    } else {
        FeatureKind::Continuous
    }
}

/// Categorical iff fewer than 10 distinct defined values.
pub fn classify(column: &[f64]) -> FeatureKind {
    classify_with(column, DEFAULT_UNIQUE_THRESHOLD)
}

pub fn classify_with(column: &[f64], unique_threshold: usize) -> FeatureKind {
    kind_for(unique_count(column), unique_threshold)
}

/// Drops continuous columns whose duplication ratio exceeds `threshold`.
pub fn duplication_filter(mut m: FeatureMatrix, threshold: f64) -> FeatureMatrix {
    for i in 0..m.features.len() {
        let meta = &m.features[i].meta;
        if meta.kept && meta.kind == FeatureKind::Continuous && meta.duplication_ratio > threshold {
            log::info!("dropping `{}`: duplication ratio {:.4}", meta.name, meta.duplication_ratio);
            m.drop_feature(i, DropReason::Duplication);
        }
    }
    m
}

/// Pearson correlation over the rows where both columns are defined.
/// `None` when either is constant there (or fewer than 2 rows).
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (*x, *y))
        .collect();
    let n = pairs.len() as f64;
    if pairs.len() < 2 {
        return None;
    }
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

fn is_constant(v: &[f64]) -> bool {
    let mut defined = v.iter().filter(|x| x.is_finite());
    match defined.next() {
        Some(first) => defined.all(|x| x == first),
        None => true,
    }
}

/// Repeatedly finds the pair with the largest |correlation| and, while it is
/// at least `threshold`, drops the later column of that pair. Two constant
/// columns count as perfectly correlated; a constant column is otherwise
/// left out of the comparison.
pub fn correlation_prune(mut m: FeatureMatrix, threshold: f64) -> FeatureMatrix {
    let idx: Vec<usize> = (0..m.features.len()).filter(|&i| m.features[i].meta.kept).collect();
    let constant: Vec<bool> = idx.iter().map(|&i| is_constant(&m.features[i].values)).collect();
    // Dropping a column does not change the correlation of the others, so
    // the pairwise matrix is computed once.
    let k = idx.len();
    let mut corr = vec![None; k * k];
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
    let values: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            if constant[a] && constant[b] {
                Some(1.0)
            } else if constant[a] || constant[b] {
                None
            } else {
                pearson(&m.features[idx[a]].values, &m.features[idx[b]].values).map(f64::abs)
            }
        })
        .collect();
    for (&(a, b), v) in pairs.iter().zip(values) {
        corr[a * k + b] = v;
    }
    let mut alive = vec![true; k];
    loop {
        let mut worst: Option<(f64, usize, usize)> = None;
        for &(a, b) in &pairs {
            if !alive[a] || !alive[b] {
                continue;
            }
            if let Some(c) = corr[a * k + b] {
                if worst.is_none_or(|(w, _, _)| c > w) {
                    worst = Some((c, a, b));
                }
            }
        }
        match worst {
            Some((c, a, b)) if c >= threshold => {
                log::info!(
                    "dropping `{}`: |corr| {c:.4} with `{}`",
                    m.features[idx[b]].meta.name,
                    m.features[idx[a]].meta.name
                );
                alive[b] = false;
                m.drop_feature(idx[b], DropReason::Correlation);
            }
            _ => break,
        }
    }
    m
}

/// Largest |correlation| among kept, non-constant column pairs.
pub fn max_abs_correlation(m: &FeatureMatrix) -> f64 {
    let cols: Vec<&[f64]> = m.kept().map(|f| f.values.as_slice()).collect();
    let mut worst = 0.0f64;
    for a in 0..cols.len() {
        for b in a + 1..cols.len() {
            if let Some(c) = pearson(cols[a], cols[b]) {
                worst = worst.max(c.abs());
            }
        }
    }
    worst
}

/// Z-scores every kept column with the mean and sample stddev measured on
/// dates within `fit` (inclusive). Columns with zero spread there are dropped.
pub fn standardize(mut m: FeatureMatrix, fit: (NaiveDate, NaiveDate)) -> Result<FeatureMatrix> {
    let rows: Vec<usize> = (0..m.dates.len())
        .filter(|&t| m.dates[t] >= fit.0 && m.dates[t] <= fit.1)
        .collect();
    if rows.len() < 2 {
        return Err(Error::param(format!(
            "standardization range {}..{} covers {} dates; need at least 2",
            fit.0,
            fit.1,
            rows.len()
        )));
    }
    for i in 0..m.features.len() {
        if !m.features[i].meta.kept {
            continue;
        }
        let v = &m.features[i].values;
        let xs: Vec<f64> = rows.iter().map(|&t| v[t]).filter(|x| x.is_finite()).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        let stddev = var.sqrt();
        if xs.len() < 2 || !(stddev > 0.0) || !stddev.is_finite() {
            log::warn!("feature `{}` has no spread on the fit range; dropped", m.features[i].meta.name);
            m.drop_feature(i, DropReason::Constant);
            continue;
        }
        let f = &mut m.features[i];
        for x in f.values.iter_mut() {
            *x = (*x - mean) / stddev;
        }
        f.meta.scaling = Some(Scaling { mean, stddev });
    }
    m.fit_range = Some(fit);
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub unique_threshold: usize,
    pub duplication_threshold: f64,
    pub correlation_threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            unique_threshold: DEFAULT_UNIQUE_THRESHOLD,
            duplication_threshold: DEFAULT_DUPLICATION_THRESHOLD,
            correlation_threshold: DEFAULT_CORRELATION_THRESHOLD,
        }
    }
}

/// Classification, duplication filter, then correlation pruning.
pub fn apply_filters(mut m: FeatureMatrix, config: &FilterConfig) -> FeatureMatrix {
    m.describe(config.unique_threshold);
    let m = duplication_filter(m, config.duplication_threshold);
    correlation_prune(m, config.correlation_threshold)
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Categorical => "categorical",
            FeatureKind::Continuous => "continuous",
        })
    }
}

impl FromStr for FeatureKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "categorical" => Ok(FeatureKind::Categorical),
            "continuous" => Ok(FeatureKind::Continuous),
            _ => Err(Error::Format(format!("unknown feature kind `{s}`"))),
        }
    }
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropReason::Duplication => "duplication",
            DropReason::Correlation => "correlation",
            DropReason::AllUndefined => "all_undefined",
            DropReason::Constant => "constant",
        })
    }
}

impl FromStr for DropReason {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "duplication" => Ok(DropReason::Duplication),
            "correlation" => Ok(DropReason::Correlation),
            "all_undefined" => Ok(DropReason::AllUndefined),
            "constant" => Ok(DropReason::Constant),
            _ => Err(Error::Format(format!("unknown drop reason `{s}`"))),
        }
    }
}

/// `date,<kept feature names...>`; undefined values are empty fields.
pub fn write_matrix_csv<W: Write>(m: &FeatureMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let kept: Vec<&Feature> = m.kept().collect();
    let mut header = vec!["date".to_string()];
    header.extend(kept.iter().map(|f| f.meta.name.clone()));
    w.write_record(&header).map_err(std::io::Error::other)?;
    for (t, d) in m.dates.iter().enumerate() {
        let mut row = vec![d.to_string()];
        row.extend(kept.iter().map(|f| {
            let v = f.values[t];
            if v.is_finite() {
                v.to_string()
            } else {
                String::new()
            }
        }));
        w.write_record(&row).map_err(std::io::Error::other)?;
    }
    w.flush()?;
    Ok(())
}

/// Key/value sidecar with per-feature metadata and the fit range.
pub fn write_meta<W: Write>(m: &FeatureMatrix, mut out: W) -> Result<()> {
    if let Some((a, b)) = m.fit_range {
        writeln!(out, "fit_range = {a}..{b}")?;
    }
    for f in &m.features {
        let meta = &f.meta;
        let p = format!("feature.{}", meta.name);
        writeln!(out, "{p}.kind = {}", meta.kind)?;
        writeln!(out, "{p}.unique_count = {}", meta.unique_count)?;
        writeln!(out, "{p}.duplication_ratio = {}", meta.duplication_ratio)?;
        writeln!(out, "{p}.kept = {}", meta.kept)?;
        if let Some(r) = meta.drop_reason {
            writeln!(out, "{p}.drop_reason = {r}")?;
        }
        if let Some(s) = meta.scaling {
            writeln!(out, "{p}.mean = {}", s.mean)?;
            writeln!(out, "{p}.stddev = {}", s.stddev)?;
        }
    }
    Ok(())
}

fn parse_num<T: FromStr>(v: &str, line: usize) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Format(format!("metadata line {line}: bad value `{v}`")))
}

/// Reads a matrix written by [`write_matrix_csv`] and [`write_meta`].
pub fn read_matrix<R1: Read, R2: BufRead>(csv_in: R1, meta_in: R2) -> Result<FeatureMatrix> {
    let mut fit_range = None;
    let mut metas: Vec<FeatureMeta> = Vec::new();
    for (i, line) in meta_in.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once(" = ")
            .ok_or_else(|| Error::Format(format!("metadata line {line_no}: expected `key = value`")))?;
        if k == "fit_range" {
            let (a, b) = v
                .split_once("..")
                .ok_or_else(|| Error::Format(format!("metadata line {line_no}: bad range")))?;
            fit_range = Some((parse_num(a, line_no)?, parse_num(b, line_no)?));
            continue;
        }
        let rest = k
            .strip_prefix("feature.")
            .ok_or_else(|| Error::Format(format!("metadata line {line_no}: unknown key `{k}`")))?;
        let (name, attr) = rest
            .rsplit_once('.')
            .ok_or_else(|| Error::Format(format!("metadata line {line_no}: unknown key `{k}`")))?;
        if metas.last().is_none_or(|m| m.name != name) {
            metas.push(FeatureMeta::new(name));
        }
        let meta = metas.last_mut().expect("just pushed");
        match attr {
            "kind" => meta.kind = v.parse()?,
            "unique_count" => meta.unique_count = parse_num(v, line_no)?,
            "duplication_ratio" => meta.duplication_ratio = parse_num(v, line_no)?,
            "kept" => meta.kept = parse_num(v, line_no)?,
            "drop_reason" => meta.drop_reason = Some(v.parse()?),
            "mean" => meta.scaling.get_or_insert(Scaling { mean: 0.0, stddev: 1.0 }).mean = parse_num(v, line_no)?,
            "stddev" => meta.scaling.get_or_insert(Scaling { mean: 0.0, stddev: 1.0 }).stddev = parse_num(v, line_no)?,
            _ => return Err(Error::Format(format!("metadata line {line_no}: unknown key `{k}`"))),
        }
    }

    let mut rdr = csv::Reader::from_reader(csv_in);
    let header: Vec<String> = rdr
        .headers()
        .map_err(std::io::Error::other)?
        .iter()
        .map(str::to_string)
        .collect();
    if header.first().map(String::as_str) != Some("date") {
        return Err(Error::MissingColumn {
            column: "date".into(),
            path: None,
        });
    }
    let names = &header[1..];
    let kept_names: Vec<&str> = metas.iter().filter(|m| m.kept).map(|m| m.name.as_str()).collect();
    if kept_names != names.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::Format("feature CSV columns disagree with the metadata sidecar".into()));
    }
    let mut dates = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(std::io::Error::other)?;
        let line = i as u64 + 2;
        let row_err = |message: String| Error::Row {
            line,
            message,
            path: None,
        };
        dates.push(rec[0].parse::<NaiveDate>().map_err(|e| row_err(e.to_string()))?);
        for (j, col) in cols.iter_mut().enumerate() {
            let raw = rec.get(j + 1).ok_or_else(|| row_err("short row".into()))?;
            col.push(if raw.is_empty() {
                f64::NAN
            } else {
                raw.parse().map_err(|_| row_err(format!("bad value `{raw}`")))?
            });
        }
    }
    let mut cols = cols.into_iter();
    let features = metas
        .into_iter()
        .map(|meta| {
            let values = if meta.kept { cols.next().unwrap_or_default() } else { Vec::new() };
            Feature { meta, values }
        })
        .collect();
    Ok(FeatureMatrix {
        dates,
        features,
        fit_range,
    })
}
