//! k-nearest neighbours by squared Euclidean distance.

use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

pub(crate) fn train(d: &Dataset, params: &KnnParams) -> Result<ModelParams> {
    if params.k > d.n_rows() {
        return Err(Error::param(format!("k = {} exceeds the {} training rows", params.k, d.n_rows())));
    }
    Ok(ModelParams::Knn {
        x: d.values().to_vec(),
        y: d.y.clone(),
        k: params.k,
    })
}

/// Indices of the `k` training rows nearest to `query`; equal distances
/// favour the earlier row.
pub(crate) fn nearest(x: &[f64], width: usize, query: &[f64], k: usize, exclude: Option<usize>) -> Vec<usize> {
    let n = if width == 0 { 0 } else { x.len() / width };
    let mut dist: Vec<(f64, usize)> = (0..n)
        .filter(|&i| Some(i) != exclude)
        .map(|i| {
            let row = &x[i * width..(i + 1) * width];
            (row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i)
        })
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let k = k.min(dist.len());
    if k < dist.len() {
        dist.select_nth_unstable_by(k, cmp);
        dist.truncate(k);
    }
    dist.sort_by(cmp);
    dist.into_iter().map(|(_, i)| i).collect()
}

pub(crate) fn proba(x: &[f64], y: &[u8], k: usize, query: &[f64]) -> f64 {
    let width = query.len();
    let hits = nearest(x, width, query, k, None);
    hits.iter().filter(|&&i| y[i] == 1).count() as f64 / k as f64
}

/// The candidate `k` with the best validation accuracy; ties go to the
/// smallest `k`.
pub fn select_k(train: &Dataset, validation: &Dataset, candidates: &[usize]) -> Result<usize> {
    let mut best: Option<(usize, usize)> = None;
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for k in sorted {
        if k == 0 || k > train.n_rows() {
            return Err(Error::param(format!("k = {k} is outside 1..={}", train.n_rows())));
        }
        let correct = validation
            .rows()
            .zip(&validation.y)
            .filter(|(row, y)| u8::from(proba(train.values(), &train.y, k, row) > 0.5) == **y)
            .count();
        if best.is_none_or(|(_, c)| correct > c) {
            best = Some((k, correct));
        }
    }
    best.map(|(k, _)| k).ok_or_else(|| Error::param("no k candidates"))
}
