use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{kfold_cv, model_fit_predict, Scoring};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::{Family, Hyperparams};
use crate::rng::SeededRng;

/// Candidate values per hyperparameter; unlisted parameters keep their
/// defaults.
pub type SearchSpace = BTreeMap<String, Vec<Value>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub params: Hyperparams,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_params: Hyperparams,
    pub best_score: f64,
    pub scoring: Scoring,
    /// In draw order.
    pub trials: Vec<Trial>,
}

pub fn default_space(family: Family) -> SearchSpace {
    let entries: Vec<(&str, Value)> = match family {
        Family::Logistic => vec![
            ("learning_rate", json!([0.01, 0.05, 0.1, 0.5])),
            ("l2_penalty", json!([0.0, 0.0001, 0.001, 0.01, 0.1])),
            ("max_iters", json!([500, 1000, 2000])),
        ],
        Family::Tree => vec![
            ("max_depth", json!([3, 4, 5, 6, 8, 10])),
            ("min_samples_split", json!([2, 4, 6, 8, 10])),
            ("min_samples_leaf", json!([1, 2, 4, 8])),
            ("criterion", json!(["gini", "entropy"])),
        ],
        Family::Forest => vec![
            ("n_estimators", json!([50, 100, 200])),
            ("max_depth", json!([3, 5, 8])),
            ("min_samples_split", json!([2, 4, 8])),
            ("min_samples_leaf", json!([1, 2, 4])),
        ],
        Family::Knn => vec![("k", json!([3, 5, 7, 9, 11, 15, 21, 31]))],
        Family::Gbt => vec![
            ("learning_rate", json!([0.01, 0.05, 0.1, 0.3])),
            ("max_depth", json!([2, 3, 4, 6])),
            ("n_estimators", json!([50, 100, 200])),
            ("subsample", json!([0.6, 0.8, 1.0])),
            ("colsample", json!([0.6, 0.8, 1.0])),
            ("gamma", json!([0.0, 0.1, 1.0])),
        ],
        Family::Mlp => vec![
            ("hidden_units", json!([16, 32, 64])),
            ("learning_rate", json!([0.005, 0.01, 0.05])),
            ("epochs", json!([50, 100, 200])),
            ("batch_size", json!([16, 32, 64])),
        ],
    };
    entries
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.as_array().cloned().unwrap_or_default()))
        .collect()
}

fn build(family: Family, space: &SearchSpace, choice: &[usize]) -> Result<Hyperparams> {
    let mut v = serde_json::to_value(family.default_params()).map_err(|e| Error::Format(e.to_string()))?;
    let obj = v.as_object_mut().expect("hyperparams serialize to an object");
    for ((name, values), &c) in space.iter().zip(choice) {
        if !obj.contains_key(name) {
            return Err(Error::param(format!("{} has no hyperparameter `{name}`", family.name())));
        }
        obj.insert(name.clone(), values[c].clone());
    }
    let hp: Hyperparams =
        serde_json::from_value(v).map_err(|e| Error::param(format!("bad {} search value: {e}", family.name())))?;
    hp.validate()?;
    Ok(hp)
}

/// Draws up to `n_iter` distinct configurations and scores each with
/// `evaluate`. Draws stop early once the space is exhausted; the earliest
/// draw wins ties.
pub fn random_search_with<F>(family: Family, space: &SearchSpace, n_iter: usize, seed: u64, scoring: Scoring, mut evaluate: F) -> Result<SearchResult>
where
    F: FnMut(&Hyperparams) -> Result<f64>,
{
    if n_iter == 0 {
        return Err(Error::param("search needs n_iter >= 1"));
    }
    if let Some((name, _)) = space.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::param(format!("search space for `{name}` is empty")));
    }
    let sizes: Vec<usize> = space.values().map(Vec::len).collect();
    let total = sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s)).unwrap_or(usize::MAX);
    let draws = n_iter.min(total);
    let mut rng = SeededRng::new(seed);
    let mut seen = HashSet::new();
    let mut trials: Vec<Trial> = Vec::with_capacity(draws);
    while trials.len() < draws {
        let choice: Vec<usize> = sizes.iter().map(|&s| rng.below(s)).collect();
        if !seen.insert(choice.clone()) {
            continue;
        }
        let params = build(family, space, &choice)?;
        let score = evaluate(&params)?;
        trials.push(Trial { params, score });
    }
    let best = trials
        .iter()
        .fold(None::<&Trial>, |b, t| match b {
            Some(b) if t.score <= b.score => Some(b),
            _ => Some(t),
        })
        .expect("at least one trial");
    Ok(SearchResult {
        best_params: best.params.clone(),
        best_score: best.score,
        scoring,
        trials,
    })
}

/// Randomized search scored by `folds`-fold cross-validation.
pub fn random_search(
    d: &Dataset,
    family: Family,
    space: &SearchSpace,
    n_iter: usize,
    folds: usize,
    seed: u64,
    scoring: Scoring,
) -> Result<SearchResult> {
    random_search_with(family, space, n_iter, seed, scoring, |hp| {
        kfold_cv(d, folds, seed, model_fit_predict(hp, seed), scoring)
    })
}
