//! One-hidden-layer perceptron (rectified hidden units, sigmoid output) trained
//! with mini-batch SGD on log loss.

use serde::{Deserialize, Serialize};

use super::{sigmoid, softplus, ModelParams};
use crate::dataset::Dataset;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpParams {
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden_units: 32,
            learning_rate: 0.05,
            epochs: 200,
            batch_size: 32,
        }
    }
}

/// `w1` is `hidden x inputs`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpWeights {
    pub inputs: usize,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl MlpWeights {
    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        Self {
            inputs,
            hidden,
            w1: vec![0.0; inputs * hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(inputs: usize, hidden: usize, rng: &mut SeededRng) -> Self {
        let mut w = Self::zeros(inputs, hidden);
        let a1 = (6.0 / (inputs + hidden) as f64).sqrt();
        let a2 = (6.0 / (hidden + 1) as f64).sqrt();
        for v in &mut w.w1 {
            *v = (2.0 * rng.uniform() - 1.0) * a1;
        }
        for v in &mut w.w2 {
            *v = (2.0 * rng.uniform() - 1.0) * a2;
        }
        w
    }

    fn hidden_layer(&self, row: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|j| {
                let w = &self.w1[j * self.inputs..(j + 1) * self.inputs];
                (self.b1[j] + w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>()).max(0.0)
            })
            .collect()
    }

    fn logit(&self, a: &[f64]) -> f64 {
        self.b2 + self.w2.iter().zip(a).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn forward(&self, row: &[f64]) -> f64 {
        sigmoid(self.logit(&self.hidden_layer(row)))
    }

    fn axpy(&mut self, alpha: f64, other: &Self) {
        for (a, b) in self.w1.iter_mut().zip(&other.w1) {
            *a += alpha * b;
        }
        for (a, b) in self.b1.iter_mut().zip(&other.b1) {
            *a += alpha * b;
        }
        for (a, b) in self.w2.iter_mut().zip(&other.w2) {
            *a += alpha * b;
        }
        self.b2 += alpha * other.b2;
    }
}

/// Mean log loss over `rows` (all rows when `None`) and its gradient.
pub fn mlp_loss_gradient(w: &MlpWeights, d: &Dataset, rows: Option<&[usize]>) -> (f64, MlpWeights) {
    let all: Vec<usize>;
    let rows = match rows {
        Some(r) => r,
        None => {
            all = (0..d.n_rows()).collect();
            &all
        }
    };
    let mut grad = MlpWeights::zeros(w.inputs, w.hidden);
    let mut loss = 0.0;
    for &i in rows {
        let x = d.row(i);
        let y = d.y[i] as f64;
        let a = w.hidden_layer(x);
        let z = w.logit(&a);
        loss += softplus(z) - y * z;
        let dz = sigmoid(z) - y;
        grad.b2 += dz;
        for j in 0..w.hidden {
            grad.w2[j] += dz * a[j];
            if a[j] <= 0.0 {
                continue;
            }
            let da = dz * w.w2[j];
            grad.b1[j] += da;
            for (g, xv) in grad.w1[j * w.inputs..(j + 1) * w.inputs].iter_mut().zip(x) {
                *g += da * xv;
            }
        }
    }
    let scale = 1.0 / rows.len().max(1) as f64;
    let zero = MlpWeights::zeros(w.inputs, w.hidden);
    let mut out = zero;
    out.axpy(scale, &grad);
    (loss * scale, out)
}

pub(crate) fn train(d: &Dataset, params: &MlpParams, seed: u64) -> ModelParams {
    let mut rng = SeededRng::new(seed);
    let mut w = MlpWeights::init(d.n_features(), params.hidden_units, &mut rng);
    let mut order: Vec<usize> = (0..d.n_rows()).collect();
    for _ in 0..params.epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(params.batch_size) {
            let (_, g) = mlp_loss_gradient(&w, d, Some(batch));
            w.axpy(-params.learning_rate, &g);
        }
    }
    ModelParams::Mlp(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_give_one_half() {
        assert_eq!(MlpWeights::zeros(3, 4).forward(&[1.0, -2.0, 5.0]), 0.5);
    }

    #[test]
    fn learns_xor() {
        let d = Dataset::from_rows(
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            vec![0, 1, 1, 0],
        )
        .unwrap();
        let params = MlpParams {
            learning_rate: 0.1,
            epochs: 1000,
            batch_size: 4,
            ..MlpParams::default()
        };
        for seed in 0..5 {
            let ModelParams::Mlp(w) = train(&d, &params, seed) else {
                unreachable!()
            };
            for (row, y) in d.rows().zip(&d.y) {
                assert_eq!(u8::from(w.forward(row) > 0.5), *y, "seed {seed}");
            }
        }
    }
}
