//! A small dense-tensor neural-network engine in `f64`: valid stride-1
//! convolution, 2x2 max pooling, batch normalization, ReLU, fully
//! connected layers, inverted dropout, softmax cross-entropy and Adam.
//!
//! Convolution is cross-correlation (no kernel flip). All computation is
//! serial with a fixed accumulation order, so a training step repeated
//! from the same state and seed is bit-identical.

mod adam;
mod batchnorm;
pub mod checkpoint;
mod layers;
mod network;
mod ops;
mod tensor;
mod trainer;

pub use adam::{adam_step, TrainState};
pub use batchnorm::{batchnorm2d, batchnorm2d_backward, BatchNormCache, BatchNormParams};
pub use checkpoint::Checkpoint;
pub use layers::{BatchNorm2d, Conv2d, Dense, Layer};
pub use network::Network;
pub use ops::{
    conv2d, conv2d_backward, dropout, fully_connected, fully_connected_backward, maxpool2, maxpool2_backward, relu,
    relu_backward, softmax, softmax_cross_entropy, Mode,
};
pub use tensor::Tensor;
pub use trainer::{argmax, fit, predict_proba, EpochStats, FitOptions};

pub(crate) use trainer::STREAM_INIT;
