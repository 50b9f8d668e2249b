//! Shallow classifiers over the 14 statistical features: random forest
//! with Gini importance, k-nearest neighbours, multinomial logistic
//! regression and a one-hidden-layer MLP.

mod forest;
mod knn;
mod logreg;
mod mlp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, FEATURE_NAMES};

pub use forest::{importance_csv, predict_forest, train_random_forest, ForestConfig, ForestModel, Node, Tree};
pub use knn::{knn_classify, DEFAULT_K};
pub use logreg::{logreg_loss_and_grad, train_logreg, LogRegConfig, LogRegModel};
pub use mlp::{train_mlp_baseline, MlpConfig, MlpModel};

/// Row-major feature table with one label per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub feature_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<usize>, feature_names: Vec<String>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: labels.len(),
            });
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != feature_names.len() {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} has {} values for {} features",
                    r.len(),
                    feature_names.len()
                )));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("feature row {i}")));
            }
        }
        Ok(Self {
            rows,
            labels,
            feature_names,
        })
    }

    /// Unnamed columns `f0, f1, ...`.
    pub fn unnamed(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        Self::new(rows, labels, (0..width).map(|i| format!("f{i}")).collect())
    }

    pub fn from_features(vectors: &[FeatureVector]) -> Result<Self> {
        Self::new(
            vectors.iter().map(|v| v.to_array().to_vec()).collect(),
            vectors.iter().map(|v| v.label).collect(),
            FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// `max label + 1`.
    pub fn n_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    pub(crate) fn require_classes(&self) -> Result<usize> {
        if self.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let first = self.labels[0];
        if self.labels.iter().all(|&l| l == first) {
            return Err(Error::SingleClass);
        }
        Ok(self.n_classes())
    }
}

pub(crate) fn check_width(rows: &[Vec<f64>], width: usize) -> Result<()> {
    match rows.iter().position(|r| r.len() != width) {
        Some(i) => Err(Error::ShapeMismatch(format!(
            "query row {i} has {} values, model expects {width}",
            rows[i].len()
        ))),
        None => Ok(()),
    }
}

/// Index of the largest count; ties go to the smallest index.
pub(crate) fn vote(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Per-feature z-score statistics fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Population statistics; constant columns get unit scale.
    pub fn fit(matrix: &FeatureMatrix) -> Result<Self> {
        if matrix.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let n = matrix.len() as f64;
        let f = matrix.n_features();
        let mut mean = vec![0.0; f];
        for r in &matrix.rows {
            mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; f];
        for r in &matrix.rows {
            for j in 0..f {
                var[j] += (r[j] - mean[j]).powi(2);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn transform_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        check_width(rows, self.mean.len())?;
        Ok(rows
            .iter()
            .map(|r| {
                r.iter()
                    .zip(self.mean.iter().zip(&self.std))
                    .map(|(v, (m, s))| (v - m) / s)
                    .collect()
            })
            .collect())
    }

    pub fn transform(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        Ok(FeatureMatrix {
            rows: self.transform_rows(&matrix.rows)?,
            labels: matrix.labels.clone(),
            feature_names: matrix.feature_names.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizer_uses_training_rows_only() {
        let train = FeatureMatrix::unnamed(vec![vec![1.0, 5.0], vec![3.0, 5.0]], vec![0, 1]).unwrap();
        let s = Standardizer::fit(&train).unwrap();
        assert_eq!(s.mean, [2.0, 5.0]);
        assert_eq!(s.std, [1.0, 1.0]);
        let before = s.clone();
        let out = s.transform_rows(&[vec![4.0, 7.0]]).unwrap();
        assert_eq!(out, [vec![2.0, 2.0]]);
        assert_eq!(s, before);
    }

    #[test]
    fn matrix_validation() {
        assert!(FeatureMatrix::unnamed(vec![vec![f64::NAN]], vec![0]).is_err());
        assert!(FeatureMatrix::unnamed(vec![vec![1.0]], vec![0, 1]).is_err());
        let m = FeatureMatrix::unnamed(vec![vec![1.0], vec![2.0]], vec![1, 1]).unwrap();
        assert!(matches!(m.require_classes(), Err(Error::SingleClass)));
    }
}
