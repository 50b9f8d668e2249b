use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::Rng;

/// SNR grid of the noise-robustness tables.
pub const DEFAULT_SNR_DB: [f64; 7] = [-4.0, -2.0, 0.0, 2.0, 6.0, 8.0, 10.0];

/// Adds white Gaussian noise with variance `mean(x^2) / 10^(snr_db / 10)`.
pub fn add_awgn(values: &[f64], snr_db: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::ZeroPowerSignal);
    }
    let power = values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64;
    if power.is_nan() || power <= 0.0 {
        return Err(Error::ZeroPowerSignal);
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidSpec(format!("snr_db must be finite, got {snr_db}")));
    }
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    Ok(values
        .iter()
        .map(|v| v + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub snr_db: Vec<f64>,
    pub seed: u64,
    /// Also corrupt the training folds at the same SNR.
    pub noisy_train: bool,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            snr_db: DEFAULT_SNR_DB.to_vec(),
            seed: 0,
            noisy_train: false,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty() {
            return Err(Error::InvalidSpec("snr_db list is empty".into()));
        }
        if let Some(v) = self.snr_db.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec(format!("snr_db {v} is not finite")));
        }
        Ok(())
    }

    /// The SNR points in ascending order.
    pub fn sorted_snr(&self) -> Vec<f64> {
        let mut s = self.snr_db.clone();
        s.sort_by(f64::total_cmp);
        s
    }
}
