//! Per-layer gradient checks. Each returns the worst relative error over
//! its instances.

use faultlab::model::{build_faultnet, FaultNetConfig};
use faultlab::nn::{softmax_cross_entropy, BatchNorm2d, Conv2d, Dense, Layer, Mode, Network, Tensor};
use faultlab::seed;
use rand::Rng as _;

use super::{check_layer, random_tensor, rel_err, spaced_tensor, H};

pub const INSTANCES: usize = 20;

fn run(name: &str, mut make: impl FnMut(&mut seed::Rng) -> (Layer, Tensor)) -> f64 {
    let mut rng = seed::rng(0x5eed ^ name.len() as u64);
    (0..INSTANCES)
        .map(|_| {
            let (mut layer, x) = make(&mut rng);
            check_layer(&mut layer, &x, &mut rng)
        })
        .fold(0.0, f64::max)
}

pub fn conv2d() -> f64 {
    run("conv2d", |rng| {
        let (n, c_in, c_out, k) = (
            rng.random_range(1..3),
            rng.random_range(1..4),
            rng.random_range(1..4),
            rng.random_range(1..4),
        );
        let (h, w) = (rng.random_range(k..k + 4), rng.random_range(k..k + 4));
        let mut layer = Conv2d::new(c_in, c_out, k, rng);
        layer.bias = random_tensor(&[c_out], rng);
        (Layer::Conv2d(layer), random_tensor(&[n, c_in, h, w], rng))
    })
}

pub fn batchnorm_train() -> f64 {
    run("batchnorm", |rng| {
        let (n, c) = (rng.random_range(2..4), rng.random_range(1..4));
        let (h, w) = (rng.random_range(1..4), rng.random_range(2..4));
        let mut bn = BatchNorm2d::new(c);
        bn.params.gamma = random_tensor(&[c], rng);
        bn.params.beta = random_tensor(&[c], rng);
        (Layer::BatchNorm2d(bn), random_tensor(&[n, c, h, w], rng))
    })
}

/// Eval mode is affine in the input, so a two-point difference is exact up
/// to rounding.
pub fn batchnorm_eval() -> f64 {
    let mut rng = seed::rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..INSTANCES {
        let c = rng.random_range(1..4);
        let mut bn = BatchNorm2d::new(c);
        bn.params.running_mean = (0..c).map(|_| rng.random_range(-1.0..1.0)).collect();
        bn.params.running_var = (0..c).map(|_| rng.random_range(0.5..2.0)).collect();
        bn.params.gamma = random_tensor(&[c], &mut rng);
        let x = random_tensor(&[2, c, 2, 3], &mut rng);
        let mut layer = Layer::BatchNorm2d(bn);
        let mut r = seed::rng(0);
        let y = layer.forward(&x, Mode::Eval, &mut r).unwrap();
        let g = random_tensor(y.shape(), &mut rng);
        let gx = layer.backward(&g).unwrap();
        let dot = |layer: &mut Layer, x: &Tensor, r: &mut seed::Rng| -> f64 {
            layer
                .forward(x, Mode::Eval, r)
                .unwrap()
                .data()
                .iter()
                .zip(g.data())
                .map(|(a, b)| a * b)
                .sum()
        };
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp.data_mut()[i] += H;
            let up = dot(&mut layer, &xp, &mut r);
            xp.data_mut()[i] -= 2.0 * H;
            let down = dot(&mut layer, &xp, &mut r);
            worst = worst.max(rel_err(gx.data()[i], (up - down) / (2.0 * H)));
        }
    }
    worst
}

pub fn relu() -> f64 {
    run("relu", |rng| {
        let shape = [rng.random_range(1..3), rng.random_range(1..4), rng.random_range(2..5)];
        (Layer::relu(), spaced_tensor(&shape, 1e-3, rng))
    })
}

pub fn maxpool2() -> f64 {
    run("maxpool2", |rng| {
        let shape = [
            rng.random_range(1..3),
            rng.random_range(1..3),
            rng.random_range(2..6),
            rng.random_range(2..6),
        ];
        (Layer::maxpool2(), spaced_tensor(&shape, 1e-3, rng))
    })
}

pub fn flatten() -> f64 {
    run("flatten", |rng| {
        let shape = [
            rng.random_range(1..3),
            rng.random_range(1..3),
            rng.random_range(1..4),
            rng.random_range(1..4),
        ];
        (Layer::flatten(), random_tensor(&shape, rng))
    })
}

pub fn dense() -> f64 {
    run("dense", |rng| {
        let (n, f, u) = (rng.random_range(1..4), rng.random_range(1..6), rng.random_range(1..6));
        let mut d = Dense::new(f, u, rng);
        d.bias = random_tensor(&[u], rng);
        (Layer::Dense(d), random_tensor(&[n, f], rng))
    })
}

pub fn dropout() -> f64 {
    run("dropout", |rng| {
        let p = rng.random_range(0.0..0.8);
        let shape = [rng.random_range(1..4), rng.random_range(2..8)];
        (Layer::dropout(p).unwrap(), random_tensor(&shape, rng))
    })
}

pub fn softmax_cross_entropy_head() -> f64 {
    let mut rng = seed::rng(21);
    let mut worst: f64 = 0.0;
    for _ in 0..INSTANCES {
        let (n, c) = (rng.random_range(1..5), rng.random_range(2..6));
        let logits = random_tensor(&[n, c], &mut rng)
            .data()
            .iter()
            .map(|v| 3.0 * v)
            .collect::<Vec<_>>();
        let logits = Tensor::new(vec![n, c], logits).unwrap();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let (_, grad) = softmax_cross_entropy(&logits, &labels).unwrap();
        for j in 0..logits.len() {
            let mut lp = logits.clone();
            lp.data_mut()[j] += H;
            let up = softmax_cross_entropy(&lp, &labels).unwrap().0;
            lp.data_mut()[j] -= 2.0 * H;
            let down = softmax_cross_entropy(&lp, &labels).unwrap().0;
            worst = worst.max(rel_err(grad.data()[j], (up - down) / (2.0 * H)));
        }
    }
    worst
}

/// A scaled-down FaultNet end to end: loss gradient with respect to a
/// sample of input pixels.
pub fn whole_faultnet_input() -> f64 {
    let config = FaultNetConfig {
        input_hw: (12, 12),
        in_channels: 2,
        n_classes: 3,
        conv_channels: (2, 3),
        kernel: 3,
        hidden_units: 5,
        seed: 8,
        ..FaultNetConfig::default()
    };
    let mut net = build_faultnet(&config).unwrap();
    let mut rng = seed::rng(2);
    let x = random_tensor(&[3, 2, 12, 12], &mut rng);
    let labels = [0, 2, 1];
    let loss = |net: &mut Network, x: &Tensor| {
        let mut r = seed::rng(77);
        let logits = net.forward(x, Mode::Train, &mut r).unwrap();
        softmax_cross_entropy(&logits, &labels).unwrap()
    };
    let (_, g) = loss(&mut net, &x);
    let gx = net.backward(&g).unwrap();
    let mut worst: f64 = 0.0;
    for i in (0..x.len()).step_by(37) {
        let mut xp = x.clone();
        xp.data_mut()[i] += H;
        let up = loss(&mut net, &xp).0;
        xp.data_mut()[i] -= 2.0 * H;
        let down = loss(&mut net, &xp).0;
        worst = worst.max(rel_err(gx.data()[i], (up - down) / (2.0 * H)));
    }
    worst
}

/// Every per-layer check, named.
pub fn all_layers() -> Vec<(&'static str, f64)> {
    vec![
        ("conv2d", conv2d()),
        ("batchnorm_train", batchnorm_train()),
        ("batchnorm_eval", batchnorm_eval()),
        ("relu", relu()),
        ("maxpool2", maxpool2()),
        ("flatten", flatten()),
        ("dense", dense()),
        ("dropout", dropout()),
        ("softmax_cross_entropy", softmax_cross_entropy_head()),
    ]
}
