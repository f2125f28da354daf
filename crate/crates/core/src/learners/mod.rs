//! Binary classifiers implemented from scratch, SMOTE oversampling, and a
//! versioned JSON model format.
//!
//! Every trainer is deterministic in `(data, hyperparams, seed)`. Parallel
//! work (forest trees) draws from per-unit substreams of the seed, so thread
//! count never changes the result.

mod forest;
mod gbt;
mod knn;
mod logistic;
mod mlp;
mod smote;
mod tree;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub use forest::ForestParams;
pub use gbt::{class_weights, train_gbt_traced, GbtParams};
pub use knn::{select_k, KnnParams};
pub use logistic::{logistic_loss_gradient, LogisticParams};
pub use mlp::{mlp_loss_gradient, MlpParams, MlpWeights};
pub use smote::{interpolate, smote, SmoteParams};
pub use tree::{Criterion, Node, Tree, TreeParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Logistic,
    Tree,
    Forest,
    Knn,
    Gbt,
    Mlp,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Logistic,
        Family::Tree,
        Family::Forest,
        Family::Knn,
        Family::Gbt,
        Family::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Logistic => "logistic",
            Family::Tree => "tree",
            Family::Forest => "forest",
            Family::Knn => "knn",
            Family::Gbt => "gbt",
            Family::Mlp => "mlp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }

    pub fn default_params(self) -> Hyperparams {
        match self {
            Family::Logistic => Hyperparams::Logistic(Default::default()),
            Family::Tree => Hyperparams::Tree(Default::default()),
            Family::Forest => Hyperparams::Forest(Default::default()),
            Family::Knn => Hyperparams::Knn(Default::default()),
            Family::Gbt => Hyperparams::Gbt(Default::default()),
            Family::Mlp => Hyperparams::Mlp(Default::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Hyperparams {
    Logistic(LogisticParams),
    Tree(TreeParams),
    Forest(ForestParams),
    Knn(KnnParams),
    Gbt(GbtParams),
    Mlp(MlpParams),
}

fn positive_count(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::param(format!("{name} must be at least 1")));
    }
    Ok(())
}

fn positive_rate(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::param(format!("{name} must be a positive number, got {v}")));
    }
    Ok(())
}

fn unit_fraction(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::param(format!("{name} must lie in (0, 1], got {v}")));
    }
    Ok(())
}

impl Hyperparams {
    pub fn family(&self) -> Family {
        match self {
            Hyperparams::Logistic(_) => Family::Logistic,
            Hyperparams::Tree(_) => Family::Tree,
            Hyperparams::Forest(_) => Family::Forest,
            Hyperparams::Knn(_) => Family::Knn,
            Hyperparams::Gbt(_) => Family::Gbt,
            Hyperparams::Mlp(_) => Family::Mlp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Hyperparams::Logistic(p) => {
                positive_rate("learning_rate", p.learning_rate)?;
                positive_count("max_iters", p.max_iters)?;
                if !(p.l2_penalty >= 0.0) || !(p.tol >= 0.0) {
                    return Err(Error::param("l2_penalty and tol must be non-negative"));
                }
            }
            Hyperparams::Tree(p) => p.validate()?,
            Hyperparams::Forest(p) => {
                p.tree().validate()?;
                positive_count("n_estimators", p.n_estimators)?;
                if let Some(m) = p.features_per_split {
                    positive_count("features_per_split", m)?;
                }
            }
            Hyperparams::Knn(p) => positive_count("k", p.k)?,
            Hyperparams::Gbt(p) => {
                positive_rate("learning_rate", p.learning_rate)?;
                positive_count("max_depth", p.max_depth)?;
                unit_fraction("subsample", p.subsample)?;
                unit_fraction("colsample", p.colsample)?;
                positive_rate("scale_pos_weight", p.scale_pos_weight)?;
                if !(p.gamma >= 0.0) || !(p.lambda >= 0.0) || !(p.min_child_weight >= 0.0) {
                    return Err(Error::param("gamma, lambda and min_child_weight must be non-negative"));
                }
            }
            Hyperparams::Mlp(p) => {
                positive_count("hidden_units", p.hidden_units)?;
                positive_rate("learning_rate", p.learning_rate)?;
                positive_count("epochs", p.epochs)?;
                positive_count("batch_size", p.batch_size)?;
            }
        }
        Ok(())
    }
}

/// Learned parameters per family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Logistic {
        weights: Vec<f64>,
        intercept: f64,
    },
    Tree {
        tree: Tree,
        importances: Vec<f64>,
    },
    Forest {
        trees: Vec<Tree>,
        importances: Vec<f64>,
    },
    Knn {
        x: Vec<f64>,
        y: Vec<u8>,
        k: usize,
    },
    Gbt {
        base_score: f64,
        /// Leaf values already include the learning rate.
        trees: Vec<Tree>,
        importances: Vec<f64>,
    },
    Mlp(MlpWeights),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub hyperparams: Hyperparams,
    pub seed: u64,
    pub feature_names: Vec<String>,
    pub params: ModelParams,
}

fn both_classes(d: &Dataset) -> Result<()> {
    let [neg, pos] = d.class_counts();
    if neg == 0 || pos == 0 {
        return Err(Error::DegenerateData(format!(
            "training data needs both classes, got {neg} negative and {pos} positive rows"
        )));
    }
    Ok(())
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn train(d: &Dataset, hp: &Hyperparams, seed: u64) -> Result<TrainedModel> {
    hp.validate()?;
    if d.n_rows() == 0 {
        return Err(Error::DegenerateData("no training rows".into()));
    }
    let params = match hp {
        Hyperparams::Logistic(p) => {
            both_classes(d)?;
            logistic::train(d, p)
        }
        Hyperparams::Tree(p) => {
            both_classes(d)?;
            let (tree, importances) = tree::train(d, p);
            ModelParams::Tree { tree, importances }
        }
        Hyperparams::Forest(p) => {
            both_classes(d)?;
            forest::train(d, p, seed)
        }
        Hyperparams::Knn(p) => knn::train(d, p)?,
        Hyperparams::Gbt(p) => {
            both_classes(d)?;
            gbt::train(d, p, seed).0
        }
        Hyperparams::Mlp(p) => {
            both_classes(d)?;
            mlp::train(d, p, seed)
        }
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        hyperparams: hp.clone(),
        seed,
        feature_names: d.feature_names.clone(),
        params,
    })
}

impl TrainedModel {
    pub fn family(&self) -> Family {
        self.hyperparams.family()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn proba_row(&self, row: &[f64]) -> f64 {
        let p = match &self.params {
            ModelParams::Logistic { weights, intercept } => {
                sigmoid(intercept + weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>())
            }
            ModelParams::Tree { tree, .. } => tree.predict(row),
            ModelParams::Forest { trees, .. } => forest::mean_proba(trees, row),
            ModelParams::Knn { x, y, k } => knn::proba(x, y, *k, row),
            ModelParams::Gbt { base_score, trees, .. } => sigmoid(gbt::margin(*base_score, trees, row)),
            ModelParams::Mlp(w) => w.forward(row),
        };
        p.clamp(0.0, 1.0)
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if width != self.n_features() {
            return Err(Error::Dimension {
                expected: self.n_features(),
                actual: width,
            });
        }
        Ok(())
    }

    pub fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter()
            .map(|r| {
                self.check_width(r.len())?;
                Ok(self.proba_row(r))
            })
            .collect()
    }

    /// Probabilities for every row of `d`, whose feature names must match
    /// the training features.
    pub fn predict_proba_dataset(&self, d: &Dataset) -> Result<Vec<f64>> {
        self.check_width(d.n_features())?;
        if d.feature_names != self.feature_names {
            return Err(Error::param("dataset features differ from the model's training features"));
        }
        Ok(d.rows().map(|r| self.proba_row(r)).collect())
    }

    pub fn predict(&self, rows: &[Vec<f64>], cutoff: f64) -> Result<Vec<u8>> {
        Ok(to_classes(&self.predict_proba(rows)?, cutoff))
    }

    /// Normalized impurity importances (tree, forest, boosted trees).
    pub fn feature_importances(&self) -> Result<Vec<f64>> {
        match &self.params {
            ModelParams::Tree { importances, .. }
            | ModelParams::Forest { importances, .. }
            | ModelParams::Gbt { importances, .. } => Ok(importances.clone()),
            _ => Err(Error::Capability(format!(
                "{} models have no impurity importance",
                self.family().name()
            ))),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        let version = v.get("format_version").and_then(|x| x.as_u64());
        if version != Some(MODEL_FORMAT_VERSION as u64) {
            return Err(Error::Format(format!(
                "unsupported model format version {version:?}; expected {MODEL_FORMAT_VERSION}"
            )));
        }
        serde_json::from_value(v).map_err(|e| Error::Format(e.to_string()))
    }
}

/// `1` where the probability is strictly above `cutoff`.
pub fn to_classes(probs: &[f64], cutoff: f64) -> Vec<u8> {
    probs.iter().map(|&p| u8::from(p > cutoff)).collect()
}

/// Unnormalized scores to a distribution summing to 1 (all zero stays zero).
pub(crate) fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        for x in v.iter_mut() {
            *x /= total;
        }
    }
    v
}
