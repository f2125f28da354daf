//! The pipeline stages as plain functions over in-memory values; the
//! subcommands wrap them with artifact I/O.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use trendalpha::alpha::Catalog;
use trendalpha::dataset::Dataset;
use trendalpha::evaluation::{chronological_split, compare_models, shuffled_split, Comparison, ModelSpec};
use trendalpha::features::{apply_filters, compute_features, standardize, FeatureMatrix, FeatureOptions};
use trendalpha::labeling::{join, long_term_labels, short_term_labels, LabelKind, LabelVector};
use trendalpha::learners::Family;
use trendalpha::market_data::{fetch_csv, forward_fill, load_csv, trim, DateRange, PricePanel};

use crate::config::{RunConfig, SplitMethod};
use crate::CliError;

/// Forward-filled index panel plus constituents aligned to its dates.
#[derive(Debug, Clone)]
pub struct Panels {
    pub index: PricePanel,
    pub constituents: Option<PricePanel>,
}

fn csv_stems(dir: &Path) -> Result<BTreeSet<String>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| {
        CliError::User(format!(
            "cannot read data directory {}: {e} (set data.dir, or create it with `trendalpha synth`)",
            dir.display()
        ))
    })?;
    let mut out = BTreeSet::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::Internal(e.to_string()))?.path();
        if path.extension().is_some_and(|x| x == "csv") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string());
            }
        }
    }
    Ok(out)
}

fn load_ticker(cfg: &RunConfig, ticker: &str, present: &BTreeSet<String>) -> Result<PricePanel, CliError> {
    let d = &cfg.data;
    if !present.contains(ticker) {
        if let Some(url) = &d.fetch_url {
            let (Some(start), Some(end)) = (d.start, d.end) else {
                return Err(CliError::User("data.fetch_url needs data.start and data.end".into()));
            };
            log::info!("fetching {ticker}");
            return Ok(fetch_csv(url, ticker, DateRange { start, end }, &d.columns, &d.dir)?);
        }
        return Err(CliError::User(format!(
            "no {ticker}.csv in {} (add the file or set data.fetch_url)",
            d.dir.display()
        )));
    }
    Ok(load_csv(&d.dir.join(format!("{ticker}.csv")), &d.columns)?)
}

/// Reads (or fetches) every configured CSV and forward-fills it.
pub fn ingest(cfg: &RunConfig) -> Result<Panels, CliError> {
    let d = &cfg.data;
    let present = if d.dir.exists() || d.fetch_url.is_none() {
        csv_stems(&d.dir)?
    } else {
        BTreeSet::new()
    };
    let index = forward_fill(&load_ticker(cfg, &d.index, &present)?);
    let tickers: Vec<String> = if d.constituents.is_empty() {
        present.iter().filter(|t| **t != d.index).cloned().collect()
    } else {
        d.constituents.clone()
    };
    let constituents = if tickers.is_empty() {
        None
    } else {
        let panels = tickers
            .iter()
            .map(|t| load_ticker(cfg, t, &present))
            .collect::<Result<Vec<_>, _>>()?;
        let merged = PricePanel::merge(&panels)?;
        Some(forward_fill(&merged.align_to(index.dates())))
    };
    Ok(Panels { index, constituents })
}

pub fn load_catalog(cfg: &RunConfig) -> Result<Catalog, CliError> {
    match &cfg.features.catalog {
        Some(path) => Ok(Catalog::load(path)?),
        None => Ok(Catalog::builtin()),
    }
}

/// Number of leading rows used for fitting under the configured split.
fn train_rows(cfg: &RunConfig, n: usize) -> usize {
    let test = ((n as f64 * cfg.split.test_fraction - 1e-9).ceil() as usize).min(n);
    n - test
}

/// Alphas over the full history, then the calendar warm-up trim and
/// final-day drop, the filters, and standardization fitted on the dates
/// that will form the training split.
pub fn features(cfg: &RunConfig, panels: &Panels, catalog: &Catalog) -> Result<FeatureMatrix, CliError> {
    let options = FeatureOptions {
        reduction: cfg.features.reduction,
        unique_threshold: cfg.features.unique_threshold,
        ..FeatureOptions::default()
    };
    let mut m = compute_features(&panels.index, panels.constituents.as_ref(), catalog, &options)?;
    let kept = trim(&panels.index, cfg.data.warmup_months, cfg.data.drop_last)?;
    let (first, last) = (kept.dates()[0], kept.dates()[kept.n_dates() - 1]);
    let rows: Vec<usize> = (0..m.dates.len()).filter(|&t| m.dates[t] >= first && m.dates[t] <= last).collect();
    m.dates = rows.iter().map(|&t| m.dates[t]).collect();
    for f in &mut m.features {
        if !f.values.is_empty() {
            f.values = rows.iter().map(|&t| f.values[t]).collect();
        }
    }
    if m.dates.len() < 2 {
        return Err(CliError::User(format!(
            "only {} feature rows remain after the {}-month warm-up",
            m.dates.len(),
            cfg.data.warmup_months
        )));
    }
    let m = apply_filters(m, &cfg.features.filters());
    let fit_end = train_rows(cfg, m.dates.len()).max(2) - 1;
    let fit = (m.dates[0], m.dates[fit_end]);
    Ok(standardize(m, fit)?)
}

pub fn labels(cfg: &RunConfig, index: &PricePanel) -> Result<LabelVector, CliError> {
    let params = cfg.labels.params();
    Ok(match cfg.labels.kind {
        LabelKind::Short => short_term_labels(index, &params)?,
        LabelKind::Long => long_term_labels(index, &params)?,
    })
}

pub fn dataset(m: &FeatureMatrix, labels: &LabelVector) -> Result<Dataset, CliError> {
    Ok(join(m, labels)?)
}

pub fn split(cfg: &RunConfig, d: &Dataset) -> Result<(Dataset, Dataset), CliError> {
    Ok(match cfg.split.method {
        SplitMethod::Chronological => chronological_split(d, cfg.split.test_fraction)?,
        SplitMethod::Shuffled => shuffled_split(d, cfg.split.test_fraction, cfg.seed)?,
    })
}

/// The seven comparison models with the configured hyperparameters and
/// SMOTE setting.
pub fn comparison_specs(cfg: &RunConfig) -> Result<Vec<ModelSpec>, CliError> {
    let mut specs = ModelSpec::standard();
    for s in &mut specs {
        s.hyperparams = cfg.hyperparams(s.hyperparams.family())?;
        s.smote = cfg.smote.params();
    }
    Ok(specs)
}

pub fn compare(cfg: &RunConfig, train: &Dataset, test: &Dataset) -> Result<Comparison, CliError> {
    Ok(compare_models(&comparison_specs(cfg)?, train, test, cfg.seed)?)
}

/// Everything from panels to the comparison, for callers that do not need
/// the intermediate artifacts.
pub fn run_all(cfg: &RunConfig, panels: &Panels) -> Result<Comparison, CliError> {
    let catalog = load_catalog(cfg)?;
    let m = features(cfg, panels, &catalog)?;
    let l = labels(cfg, &panels.index)?;
    let d = dataset(&m, &l)?;
    let (train, test) = split(cfg, &d)?;
    compare(cfg, &train, &test)
}

pub fn family_label(f: Family) -> &'static str {
    match f {
        Family::Logistic => "LR",
        Family::Tree => "DT",
        Family::Forest => "RF",
        Family::Knn => "KNN",
        Family::Gbt => "GBT",
        Family::Mlp => "MLP",
    }
}
