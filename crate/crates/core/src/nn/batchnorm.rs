//! Per-channel batch normalization over `N x C x H x W` activations.

use serde::{Deserialize, Serialize};

use super::{Mode, Tensor};
use crate::error::{Error, Result};

pub const DEFAULT_MOMENTUM: f64 = 0.9;
pub const DEFAULT_EPS: f64 = 1e-5;

/// Learned scale/shift plus running statistics.
///
/// Running estimates follow `running = momentum * running + (1 - momentum) * batch`
/// using the population batch variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNormParams {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
}

impl BatchNormParams {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: Tensor::filled(&[channels], 1.0),
            beta: Tensor::zeros(&[channels]),
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            momentum: DEFAULT_MOMENTUM,
            eps: DEFAULT_EPS,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }
}

/// Values saved by the forward pass for the backward pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchNormCache {
    shape: Vec<usize>,
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    mode: Option<Mode>,
}

fn dims(input: &Tensor, channels: usize) -> Result<(usize, usize, usize)> {
    input.expect_rank(4, "batchnorm2d input")?;
    let s = input.shape();
    if s[1] != channels {
        return Err(Error::ShapeMismatch(format!(
            "batchnorm2d has {channels} channels, input {s:?}"
        )));
    }
    Ok((s[0], s[1], s[2] * s[3]))
}

pub fn batchnorm2d(input: &Tensor, params: &mut BatchNormParams, mode: Mode) -> Result<(Tensor, BatchNormCache)> {
    let (n, c, hw) = dims(input, params.channels())?;
    let m = n * hw;
    if mode == Mode::Train && m < 2 {
        return Err(Error::ShapeMismatch(
            "batchnorm2d training needs at least two values per channel".into(),
        ));
    }
    let x = input.data();
    let mut out = Tensor::zeros(input.shape());
    let mut xhat = vec![0.0; x.len()];
    let mut inv_std = vec![0.0; c];
    #[allow(clippy::needless_range_loop)]
    for ch in 0..c {
        let idx = |s: usize| (s * c + ch) * hw;
        let (mean, var) = match mode {
            Mode::Train => {
                let mut sum = 0.0;
                for s in 0..n {
                    sum += x[idx(s)..idx(s) + hw].iter().sum::<f64>();
                }
                let mean = sum / m as f64;
                let mut sq = 0.0;
                for s in 0..n {
                    sq += x[idx(s)..idx(s) + hw]
                        .iter()
                        .map(|v| (v - mean) * (v - mean))
                        .sum::<f64>();
                }
                let var = sq / m as f64;
                params.running_mean[ch] = params.momentum * params.running_mean[ch] + (1.0 - params.momentum) * mean;
                params.running_var[ch] = params.momentum * params.running_var[ch] + (1.0 - params.momentum) * var;
                (mean, var)
            }
            Mode::Eval => (params.running_mean[ch], params.running_var[ch]),
        };
        let is = 1.0 / (var + params.eps).sqrt();
        inv_std[ch] = is;
        let (g, b) = (params.gamma.data()[ch], params.beta.data()[ch]);
        for s in 0..n {
            let r = idx(s)..idx(s) + hw;
            for ((xh, o), v) in xhat[r.clone()]
                .iter_mut()
                .zip(&mut out.data_mut()[r.clone()])
                .zip(&x[r])
            {
                *xh = (v - mean) * is;
                *o = g * *xh + b;
            }
        }
    }
    Ok((
        out,
        BatchNormCache {
            shape: input.shape().to_vec(),
            xhat,
            inv_std,
            mode: Some(mode),
        },
    ))
}

/// `(grad_input, grad_gamma, grad_beta)`.
pub fn batchnorm2d_backward(
    grad_out: &Tensor,
    cache: &BatchNormCache,
    gamma: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    let mode = cache
        .mode
        .ok_or_else(|| Error::ShapeMismatch("batchnorm2d backward before forward".into()))?;
    grad_out.expect_shape(&cache.shape, "batchnorm2d grad_out")?;
    let (n, c, hw) = (cache.shape[0], cache.shape[1], cache.shape[2] * cache.shape[3]);
    let m = (n * hw) as f64;
    let dy = grad_out.data();
    let mut gi = Tensor::zeros(&cache.shape);
    let mut gg = Tensor::zeros(&[c]);
    let mut gb = Tensor::zeros(&[c]);
    for ch in 0..c {
        let idx = |s: usize| (s * c + ch) * hw;
        let (mut sum_dy, mut sum_dy_xhat) = (0.0, 0.0);
        for s in 0..n {
            let r = idx(s)..idx(s) + hw;
            for (d, xh) in dy[r.clone()].iter().zip(&cache.xhat[r]) {
                sum_dy += d;
                sum_dy_xhat += d * xh;
            }
        }
        gg.data_mut()[ch] = sum_dy_xhat;
        gb.data_mut()[ch] = sum_dy;
        let scale = gamma.data()[ch] * cache.inv_std[ch];
        for s in 0..n {
            let r = idx(s)..idx(s) + hw;
            for ((g, d), xh) in gi.data_mut()[r.clone()]
                .iter_mut()
                .zip(&dy[r.clone()])
                .zip(&cache.xhat[r])
            {
                *g = match mode {
                    Mode::Train => scale * (d - sum_dy / m - xh * sum_dy_xhat / m),
                    Mode::Eval => scale * d,
                };
            }
        }
    }
    Ok((gi, gg, gb))
}
