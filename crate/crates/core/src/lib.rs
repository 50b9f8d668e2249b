//! Vibration-based bearing fault classification.
//!
//! The pipeline runs from raw accelerometer records ([`ingest`]) through
//! segmentation, statistical features ([`features`]) or stacked
//! sliding-window channels ([`channels`]), to classifiers: a small CNN
//! ([`model`]) on top of a from-scratch tensor engine ([`nn`]), and shallow
//! baselines ([`baselines`]). [`eval`] runs stratified cross-validation and
//! noise-robustness sweeps; [`cli`] wires it all to config files.

pub mod baselines;
pub mod channels;
pub mod cli;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod model;
pub mod nn;
pub mod seed;

pub use error::{Error, Result};
