use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{check_width, FeatureMatrix};
use crate::error::{Error, Result};
use crate::nn::argmax;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegConfig {
    pub l2: f64,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            lr: 0.01,
            epochs: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    /// `n_features x n_classes`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub n_features: usize,
    pub n_classes: usize,
}

impl LogRegModel {
    /// Small seeded uniform weights, zero bias.
    pub fn init(n_features: usize, n_classes: usize, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        Self {
            weights: (0..n_features * n_classes)
                .map(|_| rng.random_range(-0.01..0.01))
                .collect(),
            bias: vec![0.0; n_classes],
            n_features,
            n_classes,
        }
    }

    fn probabilities(&self, row: &[f64]) -> Vec<f64> {
        let c = self.n_classes;
        let mut z = self.bias.clone();
        for (j, x) in row.iter().enumerate() {
            for (zk, w) in z.iter_mut().zip(&self.weights[j * c..(j + 1) * c]) {
                *zk += x * w;
            }
        }
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        z.iter_mut().for_each(|v| *v = (*v - max).exp());
        let sum: f64 = z.iter().sum();
        z.iter_mut().for_each(|v| *v /= sum);
        z
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        check_width(rows, self.n_features)?;
        Ok(rows.iter().map(|r| argmax(&self.probabilities(r))).collect())
    }
}

/// Mean softmax cross-entropy plus `l2 / 2 * |W|^2` (bias unpenalized),
/// with its gradient with respect to the weights and the bias.
pub fn logreg_loss_and_grad(model: &LogRegModel, matrix: &FeatureMatrix, l2: f64) -> (f64, Vec<f64>, Vec<f64>) {
    let (gw, gb, data_loss) = data_grad(model, matrix);
    let penalty: f64 = model.weights.iter().map(|w| w * w).sum::<f64>() * l2 / 2.0;
    let gw = gw.iter().zip(&model.weights).map(|(g, w)| g + l2 * w).collect();
    (data_loss + penalty, gw, gb)
}

fn data_grad(model: &LogRegModel, matrix: &FeatureMatrix) -> (Vec<f64>, Vec<f64>, f64) {
    let c = model.n_classes;
    let n = matrix.len() as f64;
    let mut gw = vec![0.0; model.weights.len()];
    let mut gb = vec![0.0; c];
    let mut loss = 0.0;
    for (row, &y) in matrix.rows.iter().zip(&matrix.labels) {
        let mut p = model.probabilities(row);
        loss -= p[y].max(f64::MIN_POSITIVE).ln();
        p[y] -= 1.0;
        for (j, x) in row.iter().enumerate() {
            for k in 0..c {
                gw[j * c + k] += x * p[k] / n;
            }
        }
        gb.iter_mut().zip(&p).for_each(|(g, d)| *g += d / n);
    }
    (gw, gb, loss / n)
}

/// Full-batch gradient descent. The L2 term is applied as a proximal
/// shrink, `W <- (W - lr * grad) / (1 + lr * l2)`, which stays stable for
/// any penalty strength.
pub fn train_logreg(matrix: &FeatureMatrix, config: &LogRegConfig) -> Result<LogRegModel> {
    let n_classes = matrix.require_classes()?;
    if !(config.lr > 0.0 && config.l2 >= 0.0) {
        return Err(Error::InvalidConfig("logreg needs lr > 0 and l2 >= 0".into()));
    }
    let mut model = LogRegModel::init(matrix.n_features(), n_classes, config.seed);
    let shrink = 1.0 + config.lr * config.l2;
    for _ in 0..config.epochs {
        let (gw, gb, _) = data_grad(&model, matrix);
        model
            .weights
            .iter_mut()
            .zip(&gw)
            .for_each(|(w, g)| *w = (*w - config.lr * g) / shrink);
        model.bias.iter_mut().zip(&gb).for_each(|(b, g)| *b -= config.lr * g);
    }
    Ok(model)
}
