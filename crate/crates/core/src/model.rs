//! FaultNet: two conv/pool stages and a two-layer classifier head over
//! stacked signal images.
//!
//! ```text
//! conv(c1, K) -> [bn] -> relu -> pool2 -> conv(c2, K) -> [bn] -> relu -> pool2
//!   -> flatten -> dense(hidden) -> relu -> dropout -> dense(n_classes)
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{self, BatchNorm2d, Checkpoint, Conv2d, Dense, EpochStats, FitOptions, Layer, Network, Tensor};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DropoutPlacement {
    /// After the hidden layer's ReLU.
    #[default]
    Hidden,
    /// On the logits.
    Logits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultNetConfig {
    pub input_hw: (usize, usize),
    pub in_channels: usize,
    pub n_classes: usize,
    pub conv_channels: (usize, usize),
    pub kernel: usize,
    pub hidden_units: usize,
    pub dropout_p: f64,
    pub dropout_placement: DropoutPlacement,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub batchnorm_enabled: bool,
    pub input_standardize: bool,
}

impl Default for FaultNetConfig {
    fn default() -> Self {
        Self {
            input_hw: (50, 50),
            in_channels: 3,
            n_classes: 3,
            conv_channels: (32, 64),
            kernel: 5,
            hidden_units: 256,
            dropout_p: 0.25,
            dropout_placement: DropoutPlacement::Hidden,
            lr: 0.001,
            epochs: 100,
            batch_size: 128,
            seed: 0,
            batchnorm_enabled: true,
            input_standardize: true,
        }
    }
}

fn stage(size: usize, k: usize) -> Option<usize> {
    (size + 1).checked_sub(k).map(|s| s / 2).filter(|&s| s > 0)
}

impl FaultNetConfig {
    /// Spatial size after both conv/pool stages.
    pub fn feature_hw(&self) -> Option<(usize, usize)> {
        let k = self.kernel;
        let h = stage(self.input_hw.0, k).and_then(|h| stage(h, k))?;
        let w = stage(self.input_hw.1, k).and_then(|w| stage(w, k))?;
        Some((h, w))
    }

    pub fn flatten_size(&self) -> Result<usize> {
        let (h, w) = self.feature_hw().ok_or_else(|| {
            Error::InvalidConfig(format!(
                "{}x{} input collapses under kernel {}",
                self.input_hw.0, self.input_hw.1, self.kernel
            ))
        })?;
        Ok(self.conv_channels.1 * h * w)
    }

    pub fn sample_shape(&self) -> [usize; 3] {
        [self.in_channels, self.input_hw.0, self.input_hw.1]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(1..=3).contains(&self.in_channels) {
            return bad("in_channels must be 1, 2 or 3");
        }
        if self.n_classes < 2 {
            return bad("n_classes must be at least 2");
        }
        if self.kernel == 0 || self.conv_channels.0 == 0 || self.conv_channels.1 == 0 || self.hidden_units == 0 {
            return bad("kernel, conv_channels and hidden_units must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::InvalidP(self.dropout_p));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad("lr must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        self.flatten_size().map(|_| ())
    }
}

/// Builds the initialized layer stack. Parameters are drawn from the
/// config seed's init stream.
pub fn build_faultnet(config: &FaultNetConfig) -> Result<Network> {
    config.validate()?;
    let mut rng = seed::derived_rng(config.seed, &[nn::STREAM_INIT]);
    let (c1, c2) = config.conv_channels;
    let k = config.kernel;
    let mut layers = vec![Layer::Conv2d(Conv2d::new(config.in_channels, c1, k, &mut rng))];
    if config.batchnorm_enabled {
        layers.push(Layer::BatchNorm2d(BatchNorm2d::new(c1)));
    }
    layers.extend([Layer::relu(), Layer::maxpool2()]);
    layers.push(Layer::Conv2d(Conv2d::new(c1, c2, k, &mut rng)));
    if config.batchnorm_enabled {
        layers.push(Layer::BatchNorm2d(BatchNorm2d::new(c2)));
    }
    layers.extend([Layer::relu(), Layer::maxpool2(), Layer::flatten()]);
    layers.push(Layer::Dense(Dense::new(
        config.flatten_size()?,
        config.hidden_units,
        &mut rng,
    )));
    layers.push(Layer::relu());
    let dropout = Layer::dropout(config.dropout_p)?;
    if config.dropout_placement == DropoutPlacement::Hidden {
        layers.push(dropout.clone());
    }
    layers.push(Layer::Dense(Dense::new(
        config.hidden_units,
        config.n_classes,
        &mut rng,
    )));
    if config.dropout_placement == DropoutPlacement::Logits {
        layers.push(dropout);
    }
    Ok(Network::new(layers))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelMeta {
    config: FaultNetConfig,
    channel_mean: Vec<f64>,
    channel_std: Vec<f64>,
    history: Vec<EpochStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub network: Network,
    pub config: FaultNetConfig,
    pub history: Vec<EpochStats>,
    /// Per-channel statistics from the training split; identity when
    /// standardization is off.
    pub channel_mean: Vec<f64>,
    pub channel_std: Vec<f64>,
}

fn flatten_inputs(config: &FaultNetConfig, tensors: &[Tensor]) -> Result<Vec<f64>> {
    let shape = config.sample_shape();
    let mut flat = Vec::with_capacity(tensors.len() * shape.iter().product::<usize>());
    for (i, t) in tensors.iter().enumerate() {
        if t.shape() != shape {
            return Err(Error::ShapeMismatch(format!(
                "input {i} has shape {:?}, model expects {shape:?}",
                t.shape()
            )));
        }
        flat.extend_from_slice(t.data());
    }
    Ok(flat)
}

fn channel_stats(flat: &[f64], channels: usize, plane: usize) -> (Vec<f64>, Vec<f64>) {
    let mut mean = vec![0.0; channels];
    let mut var = vec![0.0; channels];
    let count = (flat.len() / (channels * plane)) as f64 * plane as f64;
    for sample in flat.chunks_exact(channels * plane) {
        for (c, p) in sample.chunks_exact(plane).enumerate() {
            mean[c] += p.iter().sum::<f64>();
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);
    for sample in flat.chunks_exact(channels * plane) {
        for (c, p) in sample.chunks_exact(plane).enumerate() {
            var[c] += p.iter().map(|v| (v - mean[c]).powi(2)).sum::<f64>();
        }
    }
    let std = var
        .iter()
        .map(|v| {
            let s = (v / count).sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    (mean, std)
}

fn apply_stats(flat: &mut [f64], mean: &[f64], std: &[f64], plane: usize) {
    let channels = mean.len();
    for sample in flat.chunks_exact_mut(channels * plane) {
        for (c, p) in sample.chunks_exact_mut(plane).enumerate() {
            p.iter_mut().for_each(|v| *v = (*v - mean[c]) / std[c]);
        }
    }
}

/// Trains a fresh FaultNet on `[C, H, W]` tensors.
pub fn train(config: &FaultNetConfig, tensors: &[Tensor], labels: &[usize]) -> Result<TrainedModel> {
    config.validate()?;
    if tensors.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: tensors.len(),
            right: labels.len(),
        });
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= config.n_classes) {
        return Err(Error::BadLabel {
            label,
            n_classes: config.n_classes,
        });
    }
    let mut distinct = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::SingleClass);
    }
    let mut flat = flatten_inputs(config, tensors)?;
    let plane = config.input_hw.0 * config.input_hw.1;
    let (channel_mean, channel_std) = if config.input_standardize {
        channel_stats(&flat, config.in_channels, plane)
    } else {
        (vec![0.0; config.in_channels], vec![1.0; config.in_channels])
    };
    apply_stats(&mut flat, &channel_mean, &channel_std, plane);

    let mut network = build_faultnet(config)?;
    let opts = FitOptions {
        epochs: config.epochs,
        batch_size: config.batch_size,
        lr: config.lr,
        seed: config.seed,
    };
    let history = nn::fit(&mut network, &flat, &config.sample_shape(), labels, &opts)?;
    Ok(TrainedModel {
        network,
        config: config.clone(),
        history,
        channel_mean,
        channel_std,
    })
}

const PREDICT_CHUNK: usize = 64;

impl TrainedModel {
    /// Predicted labels and the `N x n_classes` probability matrix.
    pub fn predict(&self, tensors: &[Tensor]) -> Result<(Vec<usize>, Tensor)> {
        let mut flat = flatten_inputs(&self.config, tensors)?;
        let plane = self.config.input_hw.0 * self.config.input_hw.1;
        apply_stats(&mut flat, &self.channel_mean, &self.channel_std, plane);
        if tensors.is_empty() {
            return Ok((Vec::new(), Tensor::zeros(&[0, self.config.n_classes])));
        }
        let proba = nn::predict_proba(&self.network, &flat, &self.config.sample_shape(), PREDICT_CHUNK)?;
        let labels = proba
            .data()
            .chunks_exact(self.config.n_classes)
            .map(nn::argmax)
            .collect();
        Ok((labels, proba))
    }

    pub fn checksum(&self) -> u64 {
        self.network.checksum()
    }

    pub fn history_csv(&self) -> String {
        let mut s = String::from("epoch,loss,accuracy\n");
        for e in &self.history {
            s.push_str(&format!("{},{:?},{:?}\n", e.epoch, e.loss, e.accuracy));
        }
        s
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let meta = ModelMeta {
            config: self.config.clone(),
            channel_mean: self.channel_mean.clone(),
            channel_std: self.channel_std.clone(),
            history: self.history.clone(),
        };
        let meta = serde_json::to_value(meta).expect("metadata serializes");
        Checkpoint::new(self.network.clone(), self.config.seed, meta)
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        let meta: ModelMeta = serde_json::from_value(ck.metadata).map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(Self {
            network: ck.network,
            config: meta.config,
            history: meta.history,
            channel_mean: meta.channel_mean,
            channel_std: meta.channel_std,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_checkpoint().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(Checkpoint::load(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Mode;

    fn small_config() -> FaultNetConfig {
        FaultNetConfig {
            input_hw: (12, 12),
            in_channels: 2,
            n_classes: 2,
            conv_channels: (3, 4),
            kernel: 3,
            hidden_units: 8,
            epochs: 3,
            batch_size: 4,
            seed: 5,
            ..FaultNetConfig::default()
        }
    }

    fn toy_data(n: usize) -> (Vec<Tensor>, Vec<usize>) {
        let mut rng = seed::rng(9);
        use rand::Rng as _;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            let y = i % 2;
            let data = (0..2 * 144)
                .map(|j| rng.random::<f64>() + if y == 1 && j % 7 == 0 { 3.0 } else { 0.0 })
                .collect();
            xs.push(Tensor::new(vec![2, 12, 12], data).unwrap());
            ys.push(y);
        }
        (xs, ys)
    }

    #[test]
    fn flatten_widths() {
        let mut c = FaultNetConfig::default();
        assert_eq!(c.flatten_size().unwrap(), 5184);
        c.input_hw = (40, 40);
        assert_eq!(c.flatten_size().unwrap(), 3136);
        c.input_hw = (12, 12);
        assert!(matches!(c.flatten_size(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn flatten_formula_matches_tensor_flow() {
        for h in [9, 10, 13, 16, 21] {
            for w in [10, 11, 18] {
                for k in [1, 2, 3] {
                    let c = FaultNetConfig {
                        input_hw: (h, w),
                        in_channels: 1,
                        conv_channels: (2, 3),
                        kernel: k,
                        hidden_units: 4,
                        ..FaultNetConfig::default()
                    };
                    let Ok(expected) = c.flatten_size() else { continue };
                    let mut net = build_faultnet(&c).unwrap();
                    let flatten_at = net
                        .layers
                        .iter()
                        .position(|l| matches!(l, Layer::Flatten { .. }))
                        .unwrap();
                    let mut x = Tensor::zeros(&[1, 1, h, w]);
                    let mut rng = seed::rng(0);
                    for l in &mut net.layers[..=flatten_at] {
                        x = l.forward(&x, Mode::Eval, &mut rng).unwrap();
                    }
                    assert_eq!(x.shape(), [1, expected], "h={h} w={w} k={k}");
                }
            }
        }
    }

    #[test]
    fn layer_order() {
        let names: Vec<_> = build_faultnet(&FaultNetConfig::default())
            .unwrap()
            .layers
            .iter()
            .map(Layer::name)
            .collect();
        assert_eq!(
            names,
            [
                "conv2d",
                "batch_norm2d",
                "relu",
                "max_pool2",
                "conv2d",
                "batch_norm2d",
                "relu",
                "max_pool2",
                "flatten",
                "dense",
                "relu",
                "dropout",
                "dense"
            ]
        );
    }

    #[test]
    fn zero_epochs_returns_initial_network() {
        let (xs, ys) = toy_data(6);
        let c = FaultNetConfig {
            epochs: 0,
            ..small_config()
        };
        let m = train(&c, &xs, &ys).unwrap();
        assert!(m.history.is_empty());
        assert_eq!(m.network, build_faultnet(&c).unwrap());
    }

    #[test]
    fn training_is_deterministic() {
        let (xs, ys) = toy_data(10);
        let a = train(&small_config(), &xs, &ys).unwrap();
        let b = train(&small_config(), &xs, &ys).unwrap();
        assert_eq!(a.checksum(), b.checksum());
        assert_eq!(a.history, b.history);
        assert_eq!(a.history.len(), 3);
    }

    #[test]
    fn single_class_rejected() {
        let (xs, _) = toy_data(4);
        assert!(matches!(train(&small_config(), &xs, &[0; 4]), Err(Error::SingleClass)));
    }

    #[test]
    fn predict_rows_and_batch_invariance() {
        let (xs, ys) = toy_data(10);
        let m = train(&small_config(), &xs, &ys).unwrap();
        let (labels, p) = m.predict(&xs).unwrap();
        assert_eq!(labels.len(), 10);
        for row in p.data().chunks(2) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        for (i, x) in xs.iter().enumerate() {
            let (_, single) = m.predict(std::slice::from_ref(x)).unwrap();
            assert_eq!(single.data(), &p.data()[2 * i..2 * i + 2]);
        }
        let wrong = Tensor::zeros(&[1, 12, 12]);
        assert!(matches!(m.predict(&[wrong]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn checkpoint_round_trip() {
        let (xs, ys) = toy_data(6);
        let m = train(&small_config(), &xs, &ys).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        m.save(&path).unwrap();
        let back = TrainedModel::load(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.predict(&xs).unwrap(), m.predict(&xs).unwrap());
    }
}
