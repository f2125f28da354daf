//! Gradient-boosted trees for log loss with second-order split gains.

use serde::{Deserialize, Serialize};

use super::tree::{midpoint, Node, Tree};
use super::{normalize, sigmoid, softplus, ModelParams};
use crate::dataset::Dataset;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Fraction of rows drawn (without replacement) for each round.
    pub subsample: f64,
    /// Fraction of features available to each round.
    pub colsample: f64,
    /// Minimum gain for a split to be kept.
    pub gamma: f64,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    /// Minimum hessian sum in each child.
    pub min_child_weight: f64,
    /// Weight of positive rows relative to negative rows.
    pub scale_pos_weight: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            learning_rate: 0.1,
            max_depth: 3,
            subsample: 1.0,
            colsample: 1.0,
            gamma: 0.0,
            lambda: 1.0,
            min_child_weight: 1.0,
            scale_pos_weight: 1.0,
        }
    }
}

/// Per-row weights: `scale_pos_weight` for positives, 1 for negatives.
pub fn class_weights(y: &[u8], scale_pos_weight: f64) -> Vec<f64> {
    y.iter().map(|&l| if l == 1 { scale_pos_weight } else { 1.0 }).collect()
}

pub(crate) fn margin(base: f64, trees: &[Tree], row: &[f64]) -> f64 {
    base + trees.iter().map(|t| t.predict(row)).sum::<f64>()
}

fn weighted_log_loss(margins: &[f64], y: &[u8], w: &[f64]) -> f64 {
    let total: f64 = w.iter().sum();
    margins
        .iter()
        .zip(y)
        .zip(w)
        .map(|((&z, &l), &wi)| wi * (softplus(z) - l as f64 * z))
        .sum::<f64>()
        / total
}

/// Trains and returns the model with the weighted training log loss after
/// each round.
pub fn train_gbt_traced(d: &Dataset, params: &GbtParams, seed: u64) -> (ModelParams, Vec<f64>) {
    train(d, params, seed)
}

pub(crate) fn train(d: &Dataset, params: &GbtParams, seed: u64) -> (ModelParams, Vec<f64>) {
    let n = d.n_rows();
    let p = d.n_features();
    let pos = d.class_counts()[1] as f64;
    let prior = (pos / n as f64).clamp(1e-12, 1.0 - 1e-12);
    let base_score = (prior / (1.0 - prior)).ln();
    let w = class_weights(&d.y, params.scale_pos_weight);
    let mut margins = vec![base_score; n];
    let mut trees = Vec::with_capacity(params.n_estimators);
    let mut gains = vec![0.0; p];
    let mut trace = Vec::with_capacity(params.n_estimators);
    let n_rows = ((params.subsample * n as f64).round() as usize).clamp(1, n);
    let n_cols = ((params.colsample * p as f64).round() as usize).clamp(1, p.max(1));

    for round in 0..params.n_estimators {
        let mut rng = SeededRng::substream(seed, round as u64);
        let rows = if n_rows < n { rng.sample_indices(n, n_rows) } else { (0..n).collect() };
        let cols = if n_cols < p { rng.sample_indices(p, n_cols) } else { (0..p).collect() };
        let mut g = vec![0.0; n];
        let mut h = vec![0.0; n];
        for i in 0..n {
            let s = sigmoid(margins[i]);
            g[i] = w[i] * (s - d.y[i] as f64);
            h[i] = w[i] * s * (1.0 - s);
        }
        let mut builder = Builder {
            d,
            params,
            g: &g,
            h: &h,
            cols: &cols,
            nodes: Vec::new(),
            gains: &mut gains,
        };
        builder.build(rows, 0);
        let tree = Tree { nodes: builder.nodes };
        for (i, m) in margins.iter_mut().enumerate() {
            *m += tree.predict(d.row(i));
        }
        trees.push(tree);
        trace.push(weighted_log_loss(&margins, &d.y, &w));
    }
    (
        ModelParams::Gbt {
            base_score,
            trees,
            importances: normalize(gains),
        },
        trace,
    )
}

struct Builder<'a> {
    d: &'a Dataset,
    params: &'a GbtParams,
    g: &'a [f64],
    h: &'a [f64],
    cols: &'a [usize],
    nodes: Vec<Node>,
    gains: &'a mut [f64],
}

struct Split {
    gain: f64,
    feature: usize,
    threshold: f64,
    left: usize,
}

impl Builder<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda)
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let gs: f64 = rows.iter().map(|&i| self.g[i]).sum();
        let hs: f64 = rows.iter().map(|&i| self.h[i]).sum();
        self.nodes.push(Node::Leaf {
            value: -gs / (hs + self.params.lambda) * self.params.learning_rate,
        });
        if depth >= self.params.max_depth || rows.len() < 2 {
            return id;
        }
        let Some(best) = self.best_split(&rows, gs, hs) else {
            return id;
        };
        self.gains[best.feature] += best.gain;
        let mut sorted = rows;
        self.sort_by(&mut sorted, best.feature);
        let right_rows = sorted.split_off(best.left);
        let left = self.build(sorted, depth + 1);
        let right = self.build(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    fn sort_by(&self, rows: &mut [usize], f: usize) {
        rows.sort_by(|&a, &b| self.d.row(a)[f].total_cmp(&self.d.row(b)[f]).then(a.cmp(&b)));
    }

    fn best_split(&self, rows: &[usize], gs: f64, hs: f64) -> Option<Split> {
        let parent = self.score(gs, hs);
        let mut best: Option<Split> = None;
        let mut order = rows.to_vec();
        for &f in self.cols {
            self.sort_by(&mut order, f);
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 0..order.len() - 1 {
                let i = order[k];
                gl += self.g[i];
                hl += self.h[i];
                let lo = self.d.row(i)[f];
                let hi = self.d.row(order[k + 1])[f];
                if lo == hi {
                    continue;
                }
                let hr = hs - hl;
                if hl < self.params.min_child_weight || hr < self.params.min_child_weight {
                    continue;
                }
                let gain = 0.5 * (self.score(gl, hl) + self.score(gs - gl, hr) - parent);
                if gain > self.params.gamma && best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Split {
                        gain,
                        feature: f,
                        threshold: midpoint(lo, hi),
                        left: k + 1,
                    });
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_score_is_prior_log_odds() {
        let d = Dataset::from_rows((0..4).map(|i| vec![i as f64]).collect(), vec![0, 0, 0, 1]).unwrap();
        let params = GbtParams {
            n_estimators: 0,
            ..GbtParams::default()
        };
        let (ModelParams::Gbt { base_score, .. }, _) = train(&d, &params, 0) else {
            unreachable!()
        };
        assert!((base_score - (1.0f64 / 3.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn gamma_blocks_weak_splits() {
        let d = Dataset::from_rows((0..8).map(|i| vec![i as f64]).collect(), vec![0, 1, 0, 1, 0, 1, 0, 1]).unwrap();
        let params = GbtParams {
            n_estimators: 1,
            gamma: 10.0,
            ..GbtParams::default()
        };
        let (ModelParams::Gbt { trees, .. }, _) = train(&d, &params, 0) else {
            unreachable!()
        };
        assert_eq!(trees[0].nodes.len(), 1);
    }

    #[test]
    fn class_weights_scale_positives() {
        assert_eq!(class_weights(&[0, 1, 1], 3.0), vec![1.0, 3.0, 3.0]);
    }
}
