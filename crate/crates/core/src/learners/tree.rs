//! CART classification trees and the node representation shared with the
//! boosted regression trees.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::normalize;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    Gini,
    Entropy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub criterion: Criterion,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 5,
            min_samples_split: 4,
            min_samples_leaf: 1,
            criterion: Criterion::Gini,
        }
    }
}

impl TreeParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.max_depth == 0 || self.min_samples_leaf == 0 || self.min_samples_split < 2 {
            return Err(Error::param(
                "trees need max_depth >= 1, min_samples_leaf >= 1 and min_samples_split >= 2",
            ));
        }
        Ok(())
    }
}

/// Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes in pre-order; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Midpoint between two consecutive distinct sorted values, nudged down so
/// that `hi` never lands on the left side.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi {
        lo
    } else {
        m
    }
}

fn impurity(criterion: Criterion, n0: usize, n1: usize) -> f64 {
    let n = (n0 + n1) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (n0 as f64 / n, n1 as f64 / n);
    match criterion {
        Criterion::Gini => 1.0 - p0 * p0 - p1 * p1,
        Criterion::Entropy => [p0, p1].iter().filter(|p| **p > 0.0).map(|p| -p * p.log2()).sum(),
    }
}

/// Split quality; larger is better. Gini uses the exact rational
/// `(l0^2 + l1^2) / nl + (r0^2 + r1^2) / nr` so ties are detected exactly.
#[derive(Debug, Clone, Copy)]
enum Score {
    Ratio { num: u128, den: u128 },
    Float(f64),
}

impl Score {
    fn cmp(&self, other: &Score) -> Ordering {
        match (self, other) {
            (Score::Ratio { num: a, den: b }, Score::Ratio { num: c, den: d }) => (a * d).cmp(&(c * b)),
            (Score::Float(a), Score::Float(b)) => a.total_cmp(b),
            _ => unreachable!("one criterion per tree"),
        }
    }
}

fn score(criterion: Criterion, l: [usize; 2], r: [usize; 2]) -> Score {
    match criterion {
        Criterion::Gini => {
            let (nl, nr) = ((l[0] + l[1]) as u128, (r[0] + r[1]) as u128);
            let sl = (l[0] * l[0] + l[1] * l[1]) as u128;
            let sr = (r[0] * r[0] + r[1] * r[1]) as u128;
            Score::Ratio {
                num: sl * nr + sr * nl,
                den: nl * nr,
            }
        }
        Criterion::Entropy => {
            let nl = (l[0] + l[1]) as f64;
            let nr = (r[0] + r[1]) as f64;
            Score::Float(-(nl * impurity(criterion, l[0], l[1]) + nr * impurity(criterion, r[0], r[1])))
        }
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: Score,
    /// Rows going left once sorted by `feature`.
    left_count: usize,
}

pub(crate) struct Builder<'a> {
    data: &'a Dataset,
    params: &'a TreeParams,
    /// Features examined per node; all of them when `None`.
    max_features: Option<usize>,
    rng: Option<SeededRng>,
    nodes: Vec<Node>,
    importance: Vec<f64>,
    n_root: f64,
}

impl<'a> Builder<'a> {
    pub(crate) fn new(data: &'a Dataset, params: &'a TreeParams, max_features: Option<usize>, rng: Option<SeededRng>) -> Self {
        Self {
            data,
            params,
            max_features,
            rng,
            nodes: Vec::new(),
            importance: vec![0.0; data.n_features()],
            n_root: 0.0,
        }
    }

    /// Grows a tree on `rows` (repeats allowed) and returns it with raw,
    /// unnormalized impurity decreases per feature.
    pub(crate) fn grow(mut self, rows: Vec<usize>) -> (Tree, Vec<f64>) {
        self.n_root = rows.len() as f64;
        self.build(rows, 0);
        (Tree { nodes: self.nodes }, self.importance)
    }

    fn counts(&self, rows: &[usize]) -> [usize; 2] {
        let pos = rows.iter().filter(|&&i| self.data.y[i] == 1).count();
        [rows.len() - pos, pos]
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let p = self.data.n_features();
        match (self.max_features, self.rng.as_mut()) {
            (Some(m), Some(rng)) if m < p => rng.sample_indices(p, m),
            _ => (0..p).collect(),
        }
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let [n0, n1] = self.counts(&rows);
        let leaf_value = n1 as f64 / rows.len() as f64;
        self.nodes.push(Node::Leaf { value: leaf_value });
        if depth >= self.params.max_depth || rows.len() < self.params.min_samples_split || n0 == 0 || n1 == 0 {
            return id;
        }
        let features = self.candidate_features();
        let Some(best) = self.best_split(&rows, &features) else {
            return id;
        };
        let mut sorted = rows.clone();
        self.sort_by_feature(&mut sorted, best.feature);
        let (left_rows, right_rows) = sorted.split_at(best.left_count);
        let crit = self.params.criterion;
        let [l0, l1] = self.counts(left_rows);
        let [r0, r1] = self.counts(right_rows);
        let n = rows.len() as f64;
        let decrease = n * impurity(crit, n0, n1)
            - (left_rows.len() as f64 * impurity(crit, l0, l1) + right_rows.len() as f64 * impurity(crit, r0, r1));
        self.importance[best.feature] += decrease.max(0.0) / self.n_root;
        let (left_rows, right_rows) = (left_rows.to_vec(), right_rows.to_vec());
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    fn sort_by_feature(&self, order: &mut [usize], f: usize) {
        let value = |i: usize| self.data.row(i)[f];
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
    }

    /// Best split over `features`, scanning each feature's midpoints in
    /// ascending order; only strictly better candidates replace the
    /// incumbent, so ties keep the lowest feature and threshold.
    fn best_split(&self, rows: &[usize], features: &[usize]) -> Option<Candidate> {
        let leaf = self.params.min_samples_leaf;
        let total = self.counts(rows);
        let mut best: Option<Candidate> = None;
        let mut order = rows.to_vec();
        for &f in features {
            self.sort_by_feature(&mut order, f);
            let value = |i: usize| self.data.row(i)[f];
            let mut left = [0usize; 2];
            for pos in 0..order.len() - 1 {
                left[self.data.y[order[pos]] as usize] += 1;
                let (lo, hi) = (value(order[pos]), value(order[pos + 1]));
                let n_left = pos + 1;
                if lo == hi || n_left < leaf || order.len() - n_left < leaf {
                    continue;
                }
                let right = [total[0] - left[0], total[1] - left[1]];
                let s = score(self.params.criterion, left, right);
                if best.as_ref().is_none_or(|b| s.cmp(&b.score) == Ordering::Greater) {
                    best = Some(Candidate {
                        feature: f,
                        threshold: midpoint(lo, hi),
                        score: s,
                        left_count: n_left,
                    });
                }
            }
        }
        best
    }
}

pub(crate) fn train(d: &Dataset, params: &TreeParams) -> (Tree, Vec<f64>) {
    let (tree, raw) = Builder::new(d, params, None, None).grow((0..d.n_rows()).collect());
    (tree, normalize(raw))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_stump() {
        let xs = [-3.0, -1.5, -0.2, 0.4, 1.0, 2.5];
        let d = Dataset::from_rows(xs.iter().map(|x| vec![*x]).collect(), vec![0, 0, 0, 1, 1, 1]).unwrap();
        let params = TreeParams {
            max_depth: 1,
            ..Default::default()
        };
        let (tree, imp) = train(&d, &params);
        match &tree.nodes[0] {
            Node::Split { threshold, .. } => assert!(*threshold > -0.2 && *threshold < 0.4),
            other => panic!("{other:?}"),
        }
        assert!(xs.iter().zip(&d.y).all(|(x, y)| (tree.predict(&[*x]) > 0.5) == (*y == 1)));
        assert_eq!(imp, vec![1.0]);
    }

    #[test]
    fn min_samples_leaf_n_gives_prior_leaf() {
        let d = Dataset::from_rows((0..8).map(|i| vec![i as f64]).collect(), vec![0, 1, 0, 0, 1, 0, 0, 1]).unwrap();
        let params = TreeParams {
            min_samples_leaf: 8,
            ..Default::default()
        };
        let (tree, _) = train(&d, &params);
        assert_eq!(tree.nodes, vec![Node::Leaf { value: 3.0 / 8.0 }]);
    }

    #[test]
    fn depth_is_bounded() {
        let rows: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64, ((i * 37) % 11) as f64]).collect();
        let y = (0..64).map(|i| ((i * 7 + i / 3) % 2) as u8).collect();
        let d = Dataset::from_rows(rows, y).unwrap();
        for depth in 1..6 {
            let params = TreeParams {
                max_depth: depth,
                min_samples_split: 2,
                ..Default::default()
            };
            assert!(train(&d, &params).0.depth() <= depth);
        }
    }

    #[test]
    fn midpoint_never_reaches_upper_value() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        assert!(midpoint(lo, hi) < hi);
        assert_eq!(midpoint(1.0, 2.0), 1.5);
    }

    #[test]
    fn entropy_criterion_splits_too() {
        let d = Dataset::from_rows((0..10).map(|i| vec![i as f64]).collect(), (0..10).map(|i| u8::from(i >= 6)).collect())
            .unwrap();
        let params = TreeParams {
            criterion: Criterion::Entropy,
            max_depth: 1,
            ..Default::default()
        };
        match &train(&d, &params).0.nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(*threshold, 5.5),
            other => panic!("{other:?}"),
        }
    }
}
