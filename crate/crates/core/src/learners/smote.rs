//! Synthetic minority oversampling.

use serde::{Deserialize, Serialize};

use super::knn::nearest;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteParams {
    /// Minority neighbours considered for each base row.
    pub k: usize,
    /// Target minority count as a fraction of the majority count.
    pub target_ratio: f64,
}

impl Default for SmoteParams {
    fn default() -> Self {
        Self { k: 5, target_ratio: 1.0 }
    }
}

/// `a + lambda * (b - a)`.
pub fn interpolate(a: &[f64], b: &[f64], lambda: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + lambda * (y - x)).collect()
}

/// Appends synthetic minority rows until the minority class reaches
/// `round(target_ratio * majority)`. Existing rows keep their order and
/// values; each synthetic row takes its base row's date.
pub fn smote(d: &Dataset, params: &SmoteParams, seed: u64) -> Result<Dataset> {
    if params.k == 0 || !(params.target_ratio > 0.0) {
        return Err(Error::param("smote needs k >= 1 and a positive target ratio"));
    }
    let [neg, pos] = d.class_counts();
    let (minority_label, minority, majority) = if pos <= neg { (1u8, pos, neg) } else { (0u8, neg, pos) };
    let target = (params.target_ratio * majority as f64).round() as usize;
    let mut out = d.clone();
    if target <= minority {
        return Ok(out);
    }
    if minority < params.k + 1 {
        return Err(Error::param(format!(
            "smote with k = {} needs at least {} minority rows, got {minority}",
            params.k,
            params.k + 1
        )));
    }
    let members: Vec<usize> = (0..d.n_rows()).filter(|&i| d.y[i] == minority_label).collect();
    let p = d.n_features();
    let flat: Vec<f64> = members.iter().flat_map(|&i| d.row(i).iter().copied()).collect();
    let neighbours: Vec<Vec<usize>> = (0..members.len())
        .map(|m| nearest(&flat, p, &flat[m * p..(m + 1) * p], params.k, Some(m)))
        .collect();
    let mut rng = SeededRng::new(seed);
    for _ in minority..target {
        let base = rng.below(members.len());
        let other = neighbours[base][rng.below(params.k)];
        let lambda = rng.uniform();
        let row = interpolate(d.row(members[base]), d.row(members[other]), lambda);
        out.push_row(d.dates[members[base]], &row, minority_label)?;
    }
    Ok(out)
}
