use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compute_metrics, importance_report, roc_auc, Metrics, RocPoint, DEFAULT_IMPORTANCE_THRESHOLD};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::{self, smote, to_classes, Family, Hyperparams, SmoteParams, TrainedModel};

/// Which features a compared model sees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeatureSubset {
    All,
    /// Features whose importance in the model labelled `source` exceeds
    /// `threshold`.
    Important { source: String, threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub label: String,
    pub hyperparams: Hyperparams,
    pub features: FeatureSubset,
    /// Oversample the training split before fitting.
    pub smote: Option<SmoteParams>,
}

impl ModelSpec {
    pub fn new(label: &str, hyperparams: Hyperparams) -> Self {
        Self {
            label: label.to_string(),
            hyperparams,
            features: FeatureSubset::All,
            smote: None,
        }
    }

    /// LR, DT, RF, RF-subset, MLP, KNN and GBT with default hyperparameters;
    /// RF-subset is a forest refit on the features RF rates above 0.02.
    pub fn standard() -> Vec<ModelSpec> {
        let mut subset = ModelSpec::new("RF-subset", Family::Forest.default_params());
        subset.features = FeatureSubset::Important {
            source: "RF".into(),
            threshold: DEFAULT_IMPORTANCE_THRESHOLD,
        };
        vec![
            ModelSpec::new("LR", Family::Logistic.default_params()),
            ModelSpec::new("DT", Family::Tree.default_params()),
            ModelSpec::new("RF", Family::Forest.default_params()),
            subset,
            ModelSpec::new("MLP", Family::Mlp.default_params()),
            ModelSpec::new("KNN", Family::Knn.default_params()),
            ModelSpec::new("GBT", Family::Gbt.default_params()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelEvaluation {
    pub model: TrainedModel,
    /// Includes the AUC.
    pub metrics: Metrics,
    pub roc: Vec<RocPoint>,
    /// Class-1 probabilities for the test rows.
    pub probabilities: Vec<f64>,
}

/// One entry per spec, in spec order. A failed model keeps its error and
/// does not affect the others.
#[derive(Debug)]
pub struct Comparison {
    pub rows: Vec<(String, Result<ModelEvaluation>)>,
}

fn evaluate(spec: &ModelSpec, features: Option<&[String]>, train: &Dataset, test: &Dataset, seed: u64) -> Result<ModelEvaluation> {
    let (mut train, test) = match features {
        Some(names) => (train.select_features(names)?, test.select_features(names)?),
        None => (train.clone(), test.clone()),
    };
    if let Some(p) = &spec.smote {
        train = smote(&train, p, seed)?;
    }
    let model = learners::train(&train, &spec.hyperparams, seed)?;
    let probabilities = model.predict_proba_dataset(&test)?;
    let mut metrics = compute_metrics(&test.y, &to_classes(&probabilities, 0.5))?;
    let (auc, roc) = roc_auc(&test.y, &probabilities)?;
    metrics.auc = Some(auc);
    Ok(ModelEvaluation {
        model,
        metrics,
        roc,
        probabilities,
    })
}

/// Trains every spec on `train` with `seed` and scores it on `test`, class 1
/// being the positive class. Independent models run in parallel; subset
/// models run after the model they take importances from.
pub fn compare_models(specs: &[ModelSpec], train: &Dataset, test: &Dataset, seed: u64) -> Result<Comparison> {
    if specs.is_empty() {
        return Err(Error::param("nothing to compare"));
    }
    let mut results: Vec<Option<Result<ModelEvaluation>>> = specs
        .par_iter()
        .map(|s| match s.features {
            FeatureSubset::All => Some(evaluate(s, None, train, test, seed)),
            FeatureSubset::Important { .. } => None,
        })
        .collect();
    let dependent: Vec<(usize, Result<ModelEvaluation>)> = specs
        .par_iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let FeatureSubset::Important { source, threshold } = &s.features else {
                return None;
            };
            let run = || {
                let src = specs
                    .iter()
                    .position(|o| &o.label == source && o.features == FeatureSubset::All)
                    .ok_or_else(|| Error::param(format!("{}: no model labelled `{source}` to take importances from", s.label)))?;
                let base = match &results[src] {
                    Some(Ok(e)) => e,
                    _ => return Err(Error::param(format!("{}: source model `{source}` failed", s.label))),
                };
                let report = importance_report(&base.model, *threshold)?;
                if report.retained.is_empty() {
                    return Err(Error::DegenerateData(format!(
                        "{}: no feature of `{source}` has importance above {threshold}",
                        s.label
                    )));
                }
                log::info!("{}: {} features above {threshold}", s.label, report.retained.len());
                evaluate(s, Some(&report.retained), train, test, seed)
            };
            Some((i, run()))
        })
        .collect();
    for (i, r) in dependent {
        results[i] = Some(r);
    }
    let rows = specs
        .iter()
        .zip(results)
        .map(|(s, r)| {
            let r = r.expect("every spec evaluated");
            if let Err(e) = &r {
                log::error!("{} failed: {e}", s.label);
            }
            (s.label.clone(), r)
        })
        .collect();
    Ok(Comparison { rows })
}

/// Lowercase label with every other character mapped to `-`.
pub fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' })
        .collect()
}

/// `model,accuracy,precision,recall,f1,auc` with six decimals; failed
/// models get empty metric fields.
pub fn write_comparison_csv<W: Write>(c: &Comparison, mut out: W) -> Result<()> {
    writeln!(out, "model,accuracy,precision,recall,f1,auc")?;
    for (label, r) in &c.rows {
        match r {
            Ok(e) => {
                let m = &e.metrics;
                writeln!(
                    out,
                    "{label},{:.6},{:.6},{:.6},{:.6},{:.6}",
                    m.accuracy,
                    m.precision,
                    m.recall,
                    m.f1,
                    m.auc.unwrap_or(f64::NAN)
                )?;
            }
            Err(_) => writeln!(out, "{label},,,,,")?,
        }
    }
    Ok(())
}

pub fn write_roc_csv<W: Write>(points: &[RocPoint], mut out: W) -> Result<()> {
    writeln!(out, "threshold,fpr,tpr")?;
    for p in points {
        writeln!(out, "{},{},{}", p.threshold, p.fpr, p.tpr)?;
    }
    Ok(())
}

const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

/// ROC curves of every successful model on one set of axes.
pub fn write_overlay_svg<W: Write>(c: &Comparison, mut out: W) -> Result<()> {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 50.0;
    let px = |v: f64| PAD + v * SIZE;
    let py = |v: f64| PAD + (1.0 - v) * SIZE;
    let mut s = String::new();
    let full = SIZE + 2.0 * PAD;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{full}" viewBox="0 0 {w} {full}">"#,
        w = full + 150.0
    );
    let _ = writeln!(s, r#"<rect x="{PAD}" y="{PAD}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#);
    let _ = writeln!(
        s,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#999" stroke-dasharray="4 4"/>"##,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">False positive rate</text>"#, px(0.5), full - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">True positive rate</text>"#,
        py(0.5),
        py(0.5)
    );
    for (k, (label, r)) in c.rows.iter().enumerate() {
        let Ok(e) = r else { continue };
        let colour = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = e.roc.iter().map(|p| format!("{:.2},{:.2}", px(p.fpr), py(p.tpr))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let y = PAD + 20.0 * k as f64;
        let x = full + 5.0;
        let _ = writeln!(s, r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{colour}" stroke-width="3"/>"#, x + 20.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{label} ({:.3})</text>"#,
            x + 25.0,
            y + 4.0,
            e.metrics.auc.unwrap_or(f64::NAN)
        );
    }
    s.push_str("</svg>\n");
    out.write_all(s.as_bytes())?;
    Ok(())
}
