//! Random forests: bagged CART trees with per-node feature subsampling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{Builder, Criterion, Tree, TreeParams};
use super::{normalize, ModelParams};
use crate::dataset::Dataset;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub criterion: Criterion,
    /// Candidate features per node; `floor(sqrt(p))` when unset.
    pub features_per_split: Option<usize>,
    /// Draw each tree's rows with replacement.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            max_depth: 5,
            min_samples_split: 4,
            min_samples_leaf: 4,
            criterion: Criterion::Gini,
            features_per_split: None,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub fn tree(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            min_samples_leaf: self.min_samples_leaf,
            criterion: self.criterion,
        }
    }

    pub fn features_for(&self, p: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| ((p as f64).sqrt().floor() as usize).max(1))
            .min(p)
    }
}

/// Tree `i` draws its bootstrap sample and feature subsets from substream
/// `i` of `seed`.
pub(crate) fn train(d: &Dataset, params: &ForestParams, seed: u64) -> ModelParams {
    let tree_params = params.tree();
    let m = params.features_for(d.n_features());
    let n = d.n_rows();
    let grown: Vec<(Tree, Vec<f64>)> = (0..params.n_estimators)
        .into_par_iter()
        .map(|i| {
            let mut rng = SeededRng::substream(seed, i as u64);
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.below(n)).collect()
            } else {
                (0..n).collect()
            };
            let (tree, raw) = Builder::new(d, &tree_params, Some(m), Some(rng)).grow(rows);
            (tree, normalize(raw))
        })
        .collect();
    let mut importances = vec![0.0; d.n_features()];
    for (_, imp) in &grown {
        for (acc, v) in importances.iter_mut().zip(imp) {
            *acc += v;
        }
    }
    ModelParams::Forest {
        trees: grown.into_iter().map(|(t, _)| t).collect(),
        importances: normalize(importances),
    }
}

pub(crate) fn mean_proba(trees: &[Tree], row: &[f64]) -> f64 {
    trees.iter().map(|t| t.predict(row)).sum::<f64>() / trees.len() as f64
}
