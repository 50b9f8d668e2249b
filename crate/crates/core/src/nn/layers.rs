//! Batched layers with parameter/gradient buffers and forward caches.
//!
//! Every layer consumes and produces a batch tensor whose leading dimension
//! is the sample count. Samples are processed in index order and gradient
//! contributions are accumulated in that order, so results do not depend
//! on how a batch was assembled.

use rand::Rng as _;
use rand_distr::Uniform;
use serde::{Deserialize, Serialize};

use super::batchnorm::{batchnorm2d, batchnorm2d_backward, BatchNormCache, BatchNormParams};
use super::ops::{self, ConvGeom, Mode};
use super::Tensor;
use crate::error::{Error, Result};
use crate::seed::Rng;

/// Fan-in scaled uniform initialization, `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`.
fn fan_in_uniform(shape: &[usize], fan_in: usize, rng: &mut Rng) -> Tensor {
    let bound = (6.0 / fan_in as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.sample(dist)).collect()).expect("shape")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv2d {
    pub weight: Tensor,
    pub bias: Tensor,
    #[serde(skip)]
    grad_weight: Option<Tensor>,
    #[serde(skip)]
    grad_bias: Option<Tensor>,
    #[serde(skip)]
    input: Option<Tensor>,
}

impl Conv2d {
    pub fn new(c_in: usize, c_out: usize, k: usize, rng: &mut Rng) -> Self {
        Self::from_params(
            fan_in_uniform(&[c_out, c_in, k, k], c_in * k * k, rng),
            Tensor::zeros(&[c_out]),
        )
    }

    pub fn from_params(weight: Tensor, bias: Tensor) -> Self {
        Self {
            weight,
            bias,
            grad_weight: None,
            grad_bias: None,
            input: None,
        }
    }

    fn geom(&self, input: &Tensor) -> Result<ConvGeom> {
        input.expect_rank(4, "conv2d batch")?;
        let ws = self.weight.shape();
        let s = input.shape();
        let g = ConvGeom {
            c_in: ws[1],
            h: s[2],
            w: s[3],
            c_out: ws[0],
            k: ws[2],
        };
        if s[1] != g.c_in || g.k > g.h.min(g.w) {
            return Err(Error::ShapeMismatch(format!("conv2d weights {ws:?} vs input {s:?}")));
        }
        Ok(g)
    }

    pub fn forward(&mut self, input: &Tensor) -> Result<Tensor> {
        let g = self.geom(input)?;
        let n = input.shape()[0];
        let (in_len, out_len) = (g.c_in * g.h * g.w, g.c_out * g.positions());
        let mut out = Tensor::zeros(&[n, g.c_out, g.out_h(), g.out_w()]);
        let mut cols = Vec::new();
        for (x, y) in input
            .data()
            .chunks_exact(in_len)
            .zip(out.data_mut().chunks_exact_mut(out_len))
        {
            ops::conv_forward_slice(x, self.weight.data(), self.bias.data(), &g, &mut cols, y);
        }
        self.input = Some(input.clone());
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let input = self.input.as_ref().ok_or_else(no_forward)?;
        let g = self.geom(input)?;
        let n = input.shape()[0];
        grad_out.expect_shape(&[n, g.c_out, g.out_h(), g.out_w()], "conv2d grad_out")?;
        let (in_len, out_len) = (g.c_in * g.h * g.w, g.c_out * g.positions());
        let gw = self
            .grad_weight
            .get_or_insert_with(|| Tensor::zeros(self.weight.shape()));
        let gb = self.grad_bias.get_or_insert_with(|| Tensor::zeros(self.bias.shape()));
        let mut gi = Tensor::zeros(input.shape());
        let mut cols = Vec::new();
        for ((x, dy), dx) in input
            .data()
            .chunks_exact(in_len)
            .zip(grad_out.data().chunks_exact(out_len))
            .zip(gi.data_mut().chunks_exact_mut(in_len))
        {
            ops::conv_backward_slice(
                dy,
                x,
                self.weight.data(),
                &g,
                &mut cols,
                gw.data_mut(),
                gb.data_mut(),
                dx,
            );
        }
        Ok(gi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm2d {
    pub params: BatchNormParams,
    #[serde(skip)]
    grad_gamma: Option<Tensor>,
    #[serde(skip)]
    grad_beta: Option<Tensor>,
    #[serde(skip)]
    cache: Option<BatchNormCache>,
}

impl BatchNorm2d {
    pub fn new(channels: usize) -> Self {
        Self {
            params: BatchNormParams::new(channels),
            grad_gamma: None,
            grad_beta: None,
            cache: None,
        }
    }

    pub fn forward(&mut self, input: &Tensor, mode: Mode) -> Result<Tensor> {
        let (out, cache) = batchnorm2d(input, &mut self.params, mode)?;
        self.cache = Some(cache);
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let cache = self.cache.as_ref().ok_or_else(no_forward)?;
        let (gi, gg, gb) = batchnorm2d_backward(grad_out, cache, &self.params.gamma)?;
        accumulate(&mut self.grad_gamma, &gg);
        accumulate(&mut self.grad_beta, &gb);
        Ok(gi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
    #[serde(skip)]
    grad_weight: Option<Tensor>,
    #[serde(skip)]
    grad_bias: Option<Tensor>,
    #[serde(skip)]
    input: Option<Tensor>,
}

impl Dense {
    pub fn new(inputs: usize, units: usize, rng: &mut Rng) -> Self {
        Self::from_params(fan_in_uniform(&[inputs, units], inputs, rng), Tensor::zeros(&[units]))
    }

    pub fn from_params(weight: Tensor, bias: Tensor) -> Self {
        Self {
            weight,
            bias,
            grad_weight: None,
            grad_bias: None,
            input: None,
        }
    }

    pub fn forward(&mut self, input: &Tensor) -> Result<Tensor> {
        let out = ops::fully_connected(input, &self.weight, &self.bias)?;
        self.input = Some(input.clone());
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let input = self.input.as_ref().ok_or_else(no_forward)?;
        let (gi, gw, gb) = ops::fully_connected_backward(grad_out, input, &self.weight)?;
        accumulate(&mut self.grad_weight, &gw);
        accumulate(&mut self.grad_bias, &gb);
        Ok(gi)
    }
}

fn accumulate(slot: &mut Option<Tensor>, g: &Tensor) {
    match slot {
        Some(acc) => acc.data_mut().iter_mut().zip(g.data()).for_each(|(a, b)| *a += b),
        None => *slot = Some(g.clone()),
    }
}

fn no_forward() -> Error {
    Error::ShapeMismatch("backward called before forward".into())
}

/// One layer of a [`super::Network`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layer {
    Conv2d(Conv2d),
    BatchNorm2d(BatchNorm2d),
    Relu {
        #[serde(skip)]
        input: Option<Tensor>,
    },
    MaxPool2 {
        #[serde(skip)]
        argmax: Vec<usize>,
        #[serde(skip)]
        input_shape: Vec<usize>,
    },
    Flatten {
        #[serde(skip)]
        input_shape: Vec<usize>,
    },
    Dense(Dense),
    Dropout {
        p: f64,
        #[serde(skip)]
        mask: Vec<f64>,
    },
}

impl Layer {
    pub fn relu() -> Self {
        Layer::Relu { input: None }
    }

    pub fn maxpool2() -> Self {
        Layer::MaxPool2 {
            argmax: Vec::new(),
            input_shape: Vec::new(),
        }
    }

    pub fn flatten() -> Self {
        Layer::Flatten {
            input_shape: Vec::new(),
        }
    }

    pub fn dropout(p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidP(p));
        }
        Ok(Layer::Dropout { p, mask: Vec::new() })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Layer::Conv2d(_) => "conv2d",
            Layer::BatchNorm2d(_) => "batch_norm2d",
            Layer::Relu { .. } => "relu",
            Layer::MaxPool2 { .. } => "max_pool2",
            Layer::Flatten { .. } => "flatten",
            Layer::Dense(_) => "dense",
            Layer::Dropout { .. } => "dropout",
        }
    }

    pub fn forward(&mut self, input: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Tensor> {
        match self {
            Layer::Conv2d(l) => l.forward(input),
            Layer::BatchNorm2d(l) => l.forward(input, mode),
            Layer::Relu { input: cached } => {
                *cached = Some(input.clone());
                Ok(ops::relu(input))
            }
            Layer::MaxPool2 { argmax, input_shape } => {
                input.expect_rank(4, "max_pool2 batch")?;
                let s = input.shape();
                let (n, c, h, w) = (s[0], s[1], s[2], s[3]);
                if h < 2 || w < 2 {
                    return Err(Error::ShapeMismatch(format!("max_pool2 on {h}x{w}")));
                }
                let mut out = Tensor::zeros(&[n, c, h / 2, w / 2]);
                argmax.clear();
                argmax.resize(out.len(), 0);
                let (il, ol) = (c * h * w, c * (h / 2) * (w / 2));
                for (si, (x, y)) in input
                    .data()
                    .chunks_exact(il)
                    .zip(out.data_mut().chunks_exact_mut(ol))
                    .enumerate()
                {
                    let idx = &mut argmax[si * ol..(si + 1) * ol];
                    ops::maxpool_slice(x, c, h, w, y, idx);
                    idx.iter_mut().for_each(|i| *i += si * il);
                }
                *input_shape = s.to_vec();
                Ok(out)
            }
            Layer::Flatten { input_shape } => {
                *input_shape = input.shape().to_vec();
                let n = input_shape[0];
                let f = input.len() / n.max(1);
                input.clone().reshape(vec![n, f])
            }
            Layer::Dense(l) => l.forward(input),
            Layer::Dropout { p, mask } => {
                let (out, m) = ops::dropout(input, *p, mode, rng)?;
                *mask = m;
                Ok(out)
            }
        }
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Conv2d(l) => l.backward(grad_out),
            Layer::BatchNorm2d(l) => l.backward(grad_out),
            Layer::Relu { input } => ops::relu_backward(grad_out, input.as_ref().ok_or_else(no_forward)?),
            Layer::MaxPool2 { argmax, input_shape } => ops::maxpool2_backward(grad_out, argmax, input_shape),
            Layer::Flatten { input_shape } => grad_out.clone().reshape(input_shape.clone()),
            Layer::Dense(l) => l.backward(grad_out),
            Layer::Dropout { mask, .. } => {
                if mask.len() != grad_out.len() {
                    return Err(no_forward());
                }
                let data = grad_out.data().iter().zip(mask.iter()).map(|(g, m)| g * m).collect();
                Tensor::new(grad_out.shape().to_vec(), data)
            }
        }
    }

    /// `(parameter, gradient)` pairs in a fixed order. Gradients that were
    /// never accumulated are materialized as zeros.
    pub fn params_and_grads(&mut self) -> Vec<(&mut Tensor, &mut Tensor)> {
        fn pair<'a>(p: &'a mut Tensor, g: &'a mut Option<Tensor>) -> (&'a mut Tensor, &'a mut Tensor) {
            let g = g.get_or_insert_with(|| Tensor::zeros(p.shape()));
            (p, g)
        }
        match self {
            Layer::Conv2d(l) => vec![
                pair(&mut l.weight, &mut l.grad_weight),
                pair(&mut l.bias, &mut l.grad_bias),
            ],
            Layer::Dense(l) => vec![
                pair(&mut l.weight, &mut l.grad_weight),
                pair(&mut l.bias, &mut l.grad_bias),
            ],
            Layer::BatchNorm2d(l) => vec![
                pair(&mut l.params.gamma, &mut l.grad_gamma),
                pair(&mut l.params.beta, &mut l.grad_beta),
            ],
            _ => Vec::new(),
        }
    }

    pub fn params(&self) -> Vec<&Tensor> {
        match self {
            Layer::Conv2d(l) => vec![&l.weight, &l.bias],
            Layer::Dense(l) => vec![&l.weight, &l.bias],
            Layer::BatchNorm2d(l) => vec![&l.params.gamma, &l.params.beta],
            _ => Vec::new(),
        }
    }

    pub fn zero_grad(&mut self) {
        for (_, g) in self.params_and_grads() {
            g.fill(0.0);
        }
    }

    /// Drops forward caches and gradient buffers.
    pub fn clear_state(&mut self) {
        match self {
            Layer::Conv2d(l) => {
                l.input = None;
                l.grad_weight = None;
                l.grad_bias = None;
            }
            Layer::Dense(l) => {
                l.input = None;
                l.grad_weight = None;
                l.grad_bias = None;
            }
            Layer::BatchNorm2d(l) => {
                l.cache = None;
                l.grad_gamma = None;
                l.grad_beta = None;
            }
            Layer::Relu { input } => *input = None,
            Layer::MaxPool2 { argmax, input_shape } => {
                *argmax = Vec::new();
                *input_shape = Vec::new();
            }
            Layer::Flatten { input_shape } => *input_shape = Vec::new(),
            Layer::Dropout { mask, .. } => *mask = Vec::new(),
        }
    }
}
