//! L2-regularized logistic regression fitted by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use super::{sigmoid, softplus, ModelParams};
use crate::dataset::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticParams {
    pub learning_rate: f64,
    /// Coefficient of `0.5 * |w|^2` (the intercept is not penalized).
    pub l2_penalty: f64,
    pub max_iters: usize,
    /// Stop once the gradient norm falls below this.
    pub tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            l2_penalty: 1e-3,
            max_iters: 2000,
            tol: 1e-6,
        }
    }
}

/// Mean log loss plus penalty, with its gradient `(d/dw, d/db)`.
pub fn logistic_loss_gradient(d: &Dataset, weights: &[f64], intercept: f64, l2: f64) -> (f64, Vec<f64>, f64) {
    let n = d.n_rows() as f64;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    let mut loss = 0.0;
    for (row, &y) in d.rows().zip(&d.y) {
        let z = intercept + row.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>();
        let y = y as f64;
        loss += softplus(z) - y * z;
        let r = sigmoid(z) - y;
        for (g, x) in gw.iter_mut().zip(row) {
            *g += r * x;
        }
        gb += r;
    }
    let penalty: f64 = weights.iter().map(|w| w * w).sum::<f64>() * 0.5 * l2;
    for (g, w) in gw.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    (loss / n + penalty, gw, gb / n)
}

pub(crate) fn train(d: &Dataset, params: &LogisticParams) -> ModelParams {
    let mut weights = vec![0.0; d.n_features()];
    let mut intercept = 0.0;
    for _ in 0..params.max_iters {
        let (_, gw, gb) = logistic_loss_gradient(d, &weights, intercept, params.l2_penalty);
        let norm = (gw.iter().map(|g| g * g).sum::<f64>() + gb * gb).sqrt();
        if norm < params.tol {
            break;
        }
        for (w, g) in weights.iter_mut().zip(&gw) {
            *w -= params.learning_rate * g;
        }
        intercept -= params.learning_rate * gb;
    }
    ModelParams::Logistic { weights, intercept }
}
