use serde::{Deserialize, Serialize};

use super::layers::Layer;
use super::ops::{softmax_cross_entropy, Mode};
use super::Tensor;
use crate::error::{Error, Result};
use crate::seed::Rng;

/// An ordered layer stack ending in logits; the softmax cross-entropy head
/// is applied by [`Network::loss_and_backward`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Self {
        Self { layers }
    }

    /// Runs the batch through every layer. Any non-finite activation is an
    /// error naming the layer.
    pub fn forward(&mut self, input: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Tensor> {
        let mut x = input.clone();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            x = layer.forward(&x, mode, rng)?;
            if !x.all_finite() {
                return Err(Error::NonFinite(format!("output of layer {i} ({})", layer.name())));
            }
        }
        Ok(x)
    }

    pub fn backward(&mut self, grad_logits: &Tensor) -> Result<Tensor> {
        let mut g = grad_logits.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    /// Forward in training mode, cross-entropy loss, backward. Gradients
    /// are accumulated into the layers' buffers; call [`Network::zero_grad`]
    /// between steps. Returns the loss and the logits.
    pub fn loss_and_backward(&mut self, input: &Tensor, labels: &[usize], rng: &mut Rng) -> Result<(f64, Tensor)> {
        let logits = self.forward(input, Mode::Train, rng)?;
        let (loss, grad) = softmax_cross_entropy(&logits, labels)?;
        self.backward(&grad)?;
        Ok((loss, logits))
    }

    pub fn clear_state(&mut self) {
        self.layers.iter_mut().for_each(Layer::clear_state);
    }

    pub fn zero_grad(&mut self) {
        self.layers.iter_mut().for_each(Layer::zero_grad);
    }

    pub fn params_and_grads(&mut self) -> Vec<(&mut Tensor, &mut Tensor)> {
        self.layers.iter_mut().flat_map(Layer::params_and_grads).collect()
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn n_params(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    /// FNV-1a over the bit patterns of every parameter and running
    /// statistic, for cheap equality audits.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: f64| {
            for b in v.to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for layer in &self.layers {
            for p in layer.params() {
                p.data().iter().copied().for_each(&mut eat);
            }
            if let Layer::BatchNorm2d(bn) = layer {
                bn.params.running_mean.iter().copied().for_each(&mut eat);
                bn.params.running_var.iter().copied().for_each(&mut eat);
            }
        }
        h
    }
}
