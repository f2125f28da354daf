use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::to_classes;

/// Counts with class 1 as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Headline `precision`, `recall` and `f1` are for class 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
    /// Index 0 is class 0.
    pub classes: [ClassScores; 2],
    pub macro_avg: ClassScores,
    pub weighted_avg: ClassScores,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: usize, den: usize, what: &str) -> f64 {
    if den == 0 {
        warn!("{what} is undefined (zero denominator); reporting 0");
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn compute_metrics(y_true: &[u8], y_pred: &[u8]) -> Result<Metrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Dimension {
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::param("metrics need at least one row"));
    }
    let mut c = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => c.tp += 1,
            (0, 1) => c.fp += 1,
            (0, 0) => c.tn += 1,
            _ => c.fn_ += 1,
        }
    }
    let class = |tp: usize, fp: usize, fn_: usize, label: u8| {
        let precision = ratio(tp, tp + fp, &format!("class-{label} precision"));
        let recall = ratio(tp, tp + fn_, &format!("class-{label} recall"));
        ClassScores {
            precision,
            recall,
            f1: harmonic(precision, recall),
            support: tp + fn_,
        }
    };
    let c1 = class(c.tp, c.fp, c.fn_, 1);
    let c0 = class(c.tn, c.fn_, c.fp, 0);
    let n = c.total();
    let avg = |w0: f64, w1: f64| ClassScores {
        precision: w0 * c0.precision + w1 * c1.precision,
        recall: w0 * c0.recall + w1 * c1.recall,
        f1: w0 * c0.f1 + w1 * c1.f1,
        support: n,
    };
    Ok(Metrics {
        accuracy: (c.tp + c.tn) as f64 / n as f64,
        precision: c1.precision,
        recall: c1.recall,
        f1: c1.f1,
        auc: None,
        classes: [c0, c1],
        macro_avg: avg(0.5, 0.5),
        weighted_avg: avg(c0.support as f64 / n as f64, c1.support as f64 / n as f64),
        confusion: c,
    })
}

/// One ROC vertex: rows scoring `>= threshold` are predicted positive. The
/// first vertex has an infinite threshold and sits at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Trapezoidal area under the ROC curve swept over the distinct scores in
/// descending order. The area is accumulated in integer counts so it equals
/// the pairwise statistic `P(pos > neg) + P(tie) / 2` up to one rounding.
pub fn roc_auc(y_true: &[u8], scores: &[f64]) -> Result<(f64, Vec<RocPoint>)> {
    if y_true.len() != scores.len() {
        return Err(Error::Dimension {
            expected: y_true.len(),
            actual: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::param("ROC scores must be finite"));
    }
    let pos = y_true.iter().filter(|&&y| y == 1).count();
    let neg = y_true.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateData(format!(
            "AUC is undefined with {pos} positive and {neg} negative rows"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut curve = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0u128, 0u128);
    let mut twice_area = 0u128;
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        let (tp0, fp0) = (tp, fp);
        while k < order.len() && scores[order[k]] == s {
            if y_true[order[k]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        twice_area += (fp - fp0) * (tp + tp0);
        curve.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok((twice_area as f64 / (2 * pos * neg) as f64, curve))
}

/// Score used to rank hyperparameter draws; probabilities are cut at 0.5.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    Accuracy,
    Precision,
    Recall,
    #[default]
    F1,
    RocAuc,
}

impl Scoring {
    pub fn score(self, y_true: &[u8], probs: &[f64]) -> Result<f64> {
        if self == Scoring::RocAuc {
            return match roc_auc(y_true, probs) {
                Ok((auc, _)) => Ok(auc),
                Err(Error::DegenerateData(msg)) => {
                    warn!("{msg}; scoring the fold as 0.5");
                    Ok(0.5)
                }
                Err(e) => Err(e),
            };
        }
        let m = compute_metrics(y_true, &to_classes(probs, 0.5))?;
        Ok(match self {
            Scoring::Accuracy => m.accuracy,
            Scoring::Precision => m.precision,
            Scoring::Recall => m.recall,
            _ => m.f1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(tp: usize, fp: usize, tn: usize, fn_: usize) -> (Vec<u8>, Vec<u8>) {
        let mut t = Vec::new();
        let mut p = Vec::new();
        for (n, a, b) in [(tp, 1, 1), (fp, 0, 1), (tn, 0, 0), (fn_, 1, 0)] {
            t.extend(std::iter::repeat_n(a, n));
            p.extend(std::iter::repeat_n(b, n));
        }
        (t, p)
    }

    #[test]
    fn worked_confusion_matrix() {
        let (t, p) = labels(148, 106, 159, 91);
        let m = compute_metrics(&t, &p).unwrap();
        assert_eq!(m.accuracy, 307.0 / 504.0);
        assert_eq!(m.precision, 148.0 / 254.0);
        assert_eq!(m.recall, 148.0 / 239.0);
        assert_eq!(m.confusion.total(), 504);
        let lo = m.classes[0].f1.min(m.classes[1].f1);
        let hi = m.classes[0].f1.max(m.classes[1].f1);
        assert!((lo..=hi).contains(&m.weighted_avg.f1));
    }

    #[test]
    fn zero_denominators_report_zero() {
        let m = compute_metrics(&[0, 1, 0, 1], &[0, 0, 0, 0]).unwrap();
        assert_eq!((m.precision, m.recall, m.f1, m.accuracy), (0.0, 0.0, 0.0, 0.5));
        assert!(compute_metrics(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn perfect_prediction() {
        let m = compute_metrics(&[0, 1, 1], &[0, 1, 1]).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn roc_small_example() {
        let (auc, curve) = roc_auc(&[0, 0, 1, 1], &[0.1, 0.4, 0.35, 0.8]).unwrap();
        assert_eq!(auc, 0.75);
        assert_eq!(curve.len(), 5);
        assert_eq!((curve[4].fpr, curve[4].tpr), (1.0, 1.0));
        assert_eq!(roc_auc(&[0, 1], &[0.2, 0.9]).unwrap().0, 1.0);
        assert!(matches!(roc_auc(&[1, 1], &[0.2, 0.9]), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn ties_count_half() {
        assert_eq!(roc_auc(&[0, 1], &[0.5, 0.5]).unwrap().0, 0.5);
    }
}
