//! Minibatch training and batched inference over flat sample buffers.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, TrainState};
use super::ops::{softmax, Mode};
use super::{Network, Tensor};
use crate::error::{Error, Result};
use crate::seed;

/// Stream indices under the training seed.
pub(crate) const STREAM_INIT: u64 = 0;
pub(crate) const STREAM_SHUFFLE: u64 = 1;
pub(crate) const STREAM_DROPOUT: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Sample-weighted mean of the minibatch losses.
    pub loss: f64,
    /// Accuracy of the training-mode predictions made during the epoch.
    pub accuracy: f64,
}

/// Index of the largest value; ties go to the smallest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn batch_tensor(samples: &[f64], sample_shape: &[usize], idx: &[usize]) -> Tensor {
    let len: usize = sample_shape.iter().product();
    let mut data = Vec::with_capacity(idx.len() * len);
    for &i in idx {
        data.extend_from_slice(&samples[i * len..(i + 1) * len]);
    }
    let mut shape = vec![idx.len()];
    shape.extend_from_slice(sample_shape);
    Tensor::new(shape, data).expect("batch shape")
}

/// Trains `net` with Adam on softmax cross-entropy. `samples` holds
/// `labels.len()` samples of `sample_shape`, back to back. Each epoch
/// reshuffles with the seeded stream and keeps the final partial batch.
pub fn fit(
    net: &mut Network,
    samples: &[f64],
    sample_shape: &[usize],
    labels: &[usize],
    opts: &FitOptions,
) -> Result<Vec<EpochStats>> {
    let len: usize = sample_shape.iter().product();
    let n = labels.len();
    if samples.len() != n * len {
        return Err(Error::ShapeMismatch(format!(
            "{} values for {n} samples of shape {sample_shape:?}",
            samples.len()
        )));
    }
    if opts.batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be positive".into()));
    }
    if opts.epochs > 0 && n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut shuffle_rng = seed::derived_rng(opts.seed, &[STREAM_SHUFFLE]);
    let mut dropout_rng = seed::derived_rng(opts.seed, &[STREAM_DROPOUT]);
    let mut state = TrainState::new(opts.lr, opts.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(opts.epochs);

    for epoch in 1..=opts.epochs {
        order.shuffle(&mut shuffle_rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for idx in order.chunks(opts.batch_size) {
            let x = batch_tensor(samples, sample_shape, idx);
            let y: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
            net.zero_grad();
            let (loss, logits) = net.loss_and_backward(&x, &y, &mut dropout_rng)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
            }
            let c = logits.shape()[1];
            correct += logits
                .data()
                .chunks_exact(c)
                .zip(&y)
                .filter(|(row, &t)| argmax(row) == t)
                .count();
            loss_sum += loss * idx.len() as f64;

            let (mut params, grads): (Vec<&mut Tensor>, Vec<&mut Tensor>) = net.params_and_grads().into_iter().unzip();
            let grads: Vec<&Tensor> = grads.into_iter().map(|g| &*g).collect();
            adam_step(&mut params, &grads, &mut state)?;
        }
        history.push(EpochStats {
            epoch,
            loss: loss_sum / n as f64,
            accuracy: correct as f64 / n as f64,
        });
    }
    net.clear_state();
    Ok(history)
}

/// Class probabilities (`N x C`) in inference mode. Samples are evaluated
/// independently, so the result does not depend on `chunk`.
pub fn predict_proba(net: &Network, samples: &[f64], sample_shape: &[usize], chunk: usize) -> Result<Tensor> {
    let len: usize = sample_shape.iter().product();
    if len == 0 || !samples.len().is_multiple_of(len) {
        return Err(Error::ShapeMismatch(format!(
            "{} values are not a whole number of {sample_shape:?} samples",
            samples.len()
        )));
    }
    let n = samples.len() / len;
    let mut net = net.clone();
    let mut rng = seed::rng(0);
    let mut out: Vec<f64> = Vec::new();
    let mut classes = 0;
    let all: Vec<usize> = (0..n).collect();
    for idx in all.chunks(chunk.max(1)) {
        let x = batch_tensor(samples, sample_shape, idx);
        let logits = net.forward(&x, Mode::Eval, &mut rng)?;
        classes = logits.shape()[1];
        out.extend_from_slice(softmax(&logits)?.data());
    }
    net.clear_state();
    Tensor::new(vec![n, classes], out)
}
