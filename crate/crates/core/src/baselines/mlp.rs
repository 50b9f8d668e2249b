use serde::{Deserialize, Serialize};

use super::{check_width, FeatureMatrix};
use crate::error::Result;
use crate::nn::{self, Dense, EpochStats, FitOptions, Layer, Network};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 256,
            epochs: 100,
            lr: 0.001,
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub network: Network,
    pub n_features: usize,
    pub n_classes: usize,
    pub history: Vec<EpochStats>,
}

impl MlpModel {
    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        check_width(rows, self.n_features)?;
        if rows.is_empty() {
            return Ok(Vec::new());
        }
        let flat: Vec<f64> = rows.concat();
        let p = nn::predict_proba(&self.network, &flat, &[self.n_features], 256)?;
        Ok(p.data().chunks_exact(self.n_classes).map(nn::argmax).collect())
    }
}

/// `dense(hidden) -> relu -> dense(n_classes)` trained with Adam.
pub fn train_mlp_baseline(matrix: &FeatureMatrix, config: &MlpConfig) -> Result<MlpModel> {
    let n_classes = matrix.require_classes()?;
    let f = matrix.n_features();
    let mut rng = seed::derived_rng(config.seed, &[nn::STREAM_INIT]);
    let mut network = Network::new(vec![
        Layer::Dense(Dense::new(f, config.hidden, &mut rng)),
        Layer::relu(),
        Layer::Dense(Dense::new(config.hidden, n_classes, &mut rng)),
    ]);
    let opts = FitOptions {
        epochs: config.epochs,
        batch_size: config.batch_size,
        lr: config.lr,
        seed: config.seed,
    };
    let history = nn::fit(&mut network, &matrix.rows.concat(), &[f], &matrix.labels, &opts)?;
    Ok(MlpModel {
        network,
        n_features: f,
        n_classes,
        history,
    })
}
