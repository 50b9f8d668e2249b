//! Orthonormal Haar decomposition (approximation branch only).

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs {
    pub approx: Vec<f64>,
    pub detail: Vec<f64>,
    pub level: usize,
}

/// One Haar analysis step. A trailing odd sample is dropped.
pub fn haar_dwt_step(signal: &[f64]) -> Result<WaveletCoeffs> {
    if signal.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            actual: signal.len(),
        });
    }
    let (approx, detail) = signal
        .chunks_exact(2)
        .map(|p| ((p[0] + p[1]) * FRAC_1_SQRT_2, (p[0] - p[1]) * FRAC_1_SQRT_2))
        .unzip();
    Ok(WaveletCoeffs {
        approx,
        detail,
        level: 1,
    })
}

/// Synthesis step; inverse of [`haar_dwt_step`] on even-length input.
pub fn inverse_haar(approx: &[f64], detail: &[f64]) -> Result<Vec<f64>> {
    if approx.len() != detail.len() {
        return Err(Error::LengthMismatch {
            left: approx.len(),
            right: detail.len(),
        });
    }
    Ok(approx
        .iter()
        .zip(detail)
        .flat_map(|(a, d)| [(a + d) * FRAC_1_SQRT_2, (a - d) * FRAC_1_SQRT_2])
        .collect())
}

/// Approximation coefficients after `level` Haar steps.
pub fn wavelet_approx(signal: &[f64], level: usize) -> Result<Vec<f64>> {
    if level == 0 {
        return Err(Error::InvalidSpec("decomposition level must be >= 1".into()));
    }
    let needed = 1usize << level;
    if signal.len() < needed {
        return Err(Error::TooShort {
            needed,
            actual: signal.len(),
        });
    }
    let mut current = signal.to_vec();
    for _ in 0..level {
        current = haar_dwt_step(&current)?.approx;
    }
    Ok(current)
}
