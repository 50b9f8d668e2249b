//! Stratified k-fold cross-validation, confusion-matrix metrics, additive
//! white Gaussian noise and SNR sweeps.

mod cv;
mod folds;
mod metrics;
mod noise;

pub use cv::{
    channel_tensors, noise_sweep, run_cv, sweep_csv, with_noise, Classifier, CvOptions, EvalReport, Fitted,
    NoiseSetting, Pipeline, SweepRow,
};
pub use folds::{stratified_kfold, FoldPlan};
pub use metrics::{
    accuracy, confusion_csv, confusion_matrix, macro_prf, micro_prf, prf, Averaging, ConfusionMatrix, Prf,
};
pub use noise::{add_awgn, NoiseSpec, DEFAULT_SNR_DB};
