//! Central finite-difference oracle shared by the gradient tests and the
//! acceptance harness.

#![allow(dead_code)]

pub mod suite;

use faultlab::nn::{Layer, Mode, Tensor};
use faultlab::seed::{self, Rng};
use rand::Rng as _;

pub const H: f64 = 1e-5;
pub const TOL: f64 = 1e-4;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

pub fn random_tensor(shape: &[usize], rng: &mut Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Values whose pairwise gaps and distance from zero are at least `gap`,
/// so ReLU kinks and max-pool ties stay outside the difference stencil.
pub fn spaced_tensor(shape: &[usize], gap: f64, rng: &mut Rng) -> Tensor {
    let n: usize = shape.iter().product();
    let mut vals: Vec<f64> = (0..n)
        .map(|i| {
            let v = (i as f64 + 1.0) * gap;
            if i % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect();
    for i in (1..n).rev() {
        vals.swap(i, rng.random_range(0..=i));
    }
    Tensor::new(shape.to_vec(), vals).unwrap()
}

fn objective(layer: &mut Layer, x: &Tensor, weights: &Tensor, stream: u64) -> f64 {
    let mut rng = seed::rng(stream);
    let y = layer.forward(x, Mode::Train, &mut rng).unwrap();
    y.data().iter().zip(weights.data()).map(|(a, b)| a * b).sum()
}

/// Largest relative error between the layer's backward pass and central
/// differences of `sum(forward(x) * w)` for a random `w`, over the input
/// and every parameter element. The rng is reseeded per evaluation so
/// dropout masks stay fixed.
pub fn check_layer(layer: &mut Layer, x: &Tensor, rng: &mut Rng) -> f64 {
    let stream = rng.random::<u64>();
    let probe = {
        let mut r = seed::rng(stream);
        layer.forward(x, Mode::Train, &mut r).unwrap()
    };
    let w = random_tensor(probe.shape(), rng);
    layer.zero_grad();
    objective(layer, x, &w, stream);
    let gx = layer.backward(&w).unwrap();
    let analytic_params: Vec<Vec<f64>> = layer
        .params_and_grads()
        .into_iter()
        .map(|(_, g)| g.data().to_vec())
        .collect();

    let mut worst: f64 = 0.0;
    let mut xp = x.clone();
    for i in 0..x.len() {
        let orig = xp.data()[i];
        xp.data_mut()[i] = orig + H;
        let up = objective(layer, &xp, &w, stream);
        xp.data_mut()[i] = orig - H;
        let down = objective(layer, &xp, &w, stream);
        xp.data_mut()[i] = orig;
        worst = worst.max(rel_err(gx.data()[i], (up - down) / (2.0 * H)));
    }
    for (p, analytic) in analytic_params.iter().enumerate() {
        for (i, &a) in analytic.iter().enumerate() {
            let set = |layer: &mut Layer, v: f64| {
                let mut pg = layer.params_and_grads();
                let slot = &mut pg[p].0.data_mut()[i];
                std::mem::replace(slot, v)
            };
            let orig = set(layer, 0.0);
            set(layer, orig + H);
            let up = objective(layer, x, &w, stream);
            set(layer, orig - H);
            let down = objective(layer, x, &w, stream);
            set(layer, orig);
            worst = worst.max(rel_err(a, (up - down) / (2.0 * H)));
        }
    }
    worst
}
