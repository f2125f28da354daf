//! Splits, cross-validation, hyperparameter search, metrics, ROC analysis
//! and the multi-model comparison.

mod compare;
mod metrics;
mod search;

use rayon::prelude::*;

pub use compare::{
    compare_models, slug, write_comparison_csv, write_overlay_svg, write_roc_csv, Comparison, FeatureSubset,
    ModelEvaluation, ModelSpec,
};
pub use metrics::{compute_metrics, roc_auc, ClassScores, ConfusionMatrix, Metrics, RocPoint, Scoring};
pub use search::{default_space, random_search, random_search_with, SearchResult, SearchSpace, Trial};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::TrainedModel;
use crate::rng::SeededRng;

fn test_count(n: usize, test_fraction: f64) -> Result<usize> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::param(format!("test fraction {test_fraction} is outside (0, 1)")));
    }
    // The epsilon keeps exact products such as 10 * 0.3 from rounding up.
    Ok(((n as f64 * test_fraction - 1e-9).ceil() as usize).min(n))
}

/// The last `ceil(n * test_fraction)` rows by date form the test set.
pub fn chronological_split(d: &Dataset, test_fraction: f64) -> Result<(Dataset, Dataset)> {
    let n_test = test_count(d.n_rows(), test_fraction)?;
    let mut order: Vec<usize> = (0..d.n_rows()).collect();
    order.sort_by_key(|&i| d.dates[i]);
    let (train, test) = order.split_at(d.n_rows() - n_test);
    Ok((d.subset(train), d.subset(test)))
}

/// Seeded shuffled split of the same sizes as [`chronological_split`]; each
/// side keeps the original row order.
pub fn shuffled_split(d: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n_test = test_count(d.n_rows(), test_fraction)?;
    let mut order: Vec<usize> = (0..d.n_rows()).collect();
    SeededRng::new(seed).shuffle(&mut order);
    let mut test = order.split_off(d.n_rows() - n_test);
    order.sort_unstable();
    test.sort_unstable();
    Ok((d.subset(&order), d.subset(&test)))
}

/// Row indices of each fold: a seeded shuffle cut into `folds` runs whose
/// sizes differ by at most one. Indices within a fold are ascending.
pub fn kfold_indices(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || n < folds {
        return Err(Error::param(format!("{folds}-fold cross-validation needs folds >= 2 and at least {folds} rows, got {n}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    SeededRng::new(seed).shuffle(&mut perm);
    let (base, extra) = (n / folds, n % folds);
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        let mut fold = perm[start..start + len].to_vec();
        fold.sort_unstable();
        out.push(fold);
        start += len;
    }
    Ok(out)
}

/// Mean validation score over the folds. `fit_predict(train, validation)`
/// returns class-1 probabilities for the validation rows. Folds run in
/// parallel and are averaged in fold order.
pub fn kfold_cv<F>(d: &Dataset, folds: usize, seed: u64, fit_predict: F, scoring: Scoring) -> Result<f64>
where
    F: Fn(&Dataset, &Dataset) -> Result<Vec<f64>> + Sync,
{
    let assignment = kfold_indices(d.n_rows(), folds, seed)?;
    let scores: Vec<f64> = assignment
        .par_iter()
        .map(|val| {
            let train: Vec<usize> = (0..d.n_rows()).filter(|i| val.binary_search(i).is_err()).collect();
            let (tr, va) = (d.subset(&train), d.subset(val));
            let probs = fit_predict(&tr, &va)?;
            scoring.score(&va.y, &probs)
        })
        .collect::<Result<_>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Feature importances of a forest or boosted model, sorted descending,
/// with the features whose importance exceeds `threshold`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ImportanceReport {
    pub ranked: Vec<(String, f64)>,
    pub threshold: f64,
    pub retained: Vec<String>,
}

pub fn importance_report(m: &TrainedModel, threshold: f64) -> Result<ImportanceReport> {
    let imp = m.feature_importances()?;
    let mut ranked: Vec<(String, f64)> = m.feature_names.iter().cloned().zip(imp).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    let retained = ranked.iter().filter(|(_, v)| *v > threshold).map(|(n, _)| n.clone()).collect();
    Ok(ImportanceReport {
        ranked,
        threshold,
        retained,
    })
}

/// Default threshold for [`importance_report`].
pub const DEFAULT_IMPORTANCE_THRESHOLD: f64 = 0.02;

/// Fits `hp` on a training fold and scores the validation fold.
pub(crate) fn model_fit_predict(
    hp: &crate::learners::Hyperparams,
    seed: u64,
) -> impl Fn(&Dataset, &Dataset) -> Result<Vec<f64>> + Sync + '_ {
    move |train, val| crate::learners::train(train, hp, seed)?.predict_proba_dataset(val)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ordered(n: usize) -> Dataset {
        Dataset::from_rows((0..n).map(|i| vec![i as f64]).collect(), (0..n).map(|i| (i % 2) as u8).collect()).unwrap()
    }

    #[test]
    fn chronological_split_takes_the_tail() {
        let d = ordered(10);
        let (tr, te) = chronological_split(&d, 0.5).unwrap();
        assert_eq!(tr.column(0), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(te.column(0), vec![5.0, 6.0, 7.0, 8.0, 9.0]);
        let d = ordered(2516);
        let (tr, te) = chronological_split(&d, 0.2).unwrap();
        assert_eq!((tr.n_rows(), te.n_rows()), (2012, 504));
        assert!(tr.dates.iter().max() < te.dates.iter().min());
        assert!(chronological_split(&d, 1.0).is_err());
    }

    #[test]
    fn shuffled_split_is_seeded() {
        let d = ordered(50);
        let (a, b) = shuffled_split(&d, 0.2, 42).unwrap();
        assert_eq!((a.n_rows(), b.n_rows()), (40, 10));
        assert_eq!(shuffled_split(&d, 0.2, 42).unwrap().1, b);
        assert_ne!(shuffled_split(&d, 0.2, 43).unwrap().1, b);
    }

    #[test]
    fn folds_partition_rows() {
        let f = kfold_indices(10, 5, 42).unwrap();
        assert!(f.iter().all(|x| x.len() == 2));
        let f = kfold_indices(23, 5, 7).unwrap();
        let mut all: Vec<usize> = f.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        let sizes: Vec<usize> = f.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert_eq!(kfold_indices(23, 5, 7).unwrap(), f);
        assert!(kfold_indices(3, 5, 7).is_err());
    }

    #[test]
    fn constant_classifier_scores_the_validation_prior() {
        let y: Vec<u8> = (0..30).map(|i| u8::from(i % 3 == 0)).collect();
        let d = Dataset::from_rows((0..30).map(|i| vec![i as f64]).collect(), y).unwrap();
        let cv = kfold_cv(&d, 5, 42, |_, v| Ok(vec![0.0; v.n_rows()]), Scoring::Accuracy).unwrap();
        let expected: f64 = kfold_indices(30, 5, 42)
            .unwrap()
            .iter()
            .map(|f| f.iter().filter(|&&i| i % 3 != 0).count() as f64 / f.len() as f64)
            .sum::<f64>()
            / 5.0;
        assert!((cv - expected).abs() < 1e-12);
    }
}
