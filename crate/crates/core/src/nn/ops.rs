//! Forward and backward kernels of the supported layers.
//!
//! Tensor-level functions take a single sample (`C x H x W`) or a batch
//! (`N x F`, `N x C x H x W`) as documented on each. The slice-level
//! helpers are shared with the batched layers in [`super::layers`].

use rand::Rng as _;

use super::Tensor;
use crate::error::{Error, Result};
use crate::seed::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// `c = a * b + beta * c` with `a: m x k`, `b: k x n`, `c: m x n` (row-major
/// `c`), where `a` and `b` are addressed through (row, column) strides.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_strides: (usize, usize),
    b: &[f64],
    b_strides: (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    let last = |rows: usize, cols: usize, (rs, cs): (usize, usize)| {
        if rows == 0 || cols == 0 {
            0
        } else {
            (rows - 1) * rs + (cols - 1) * cs + 1
        }
    };
    assert!(a.len() >= last(m, k, a_strides), "gemm: lhs out of bounds");
    assert!(b.len() >= last(k, n, b_strides), "gemm: rhs out of bounds");
    assert!(c.len() >= m * n, "gemm: output out of bounds");
    // SAFETY: the asserts above bound every address the kernel touches.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0 as isize,
            a_strides.1 as isize,
            b.as_ptr(),
            b_strides.0 as isize,
            b_strides.1 as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Geometry of a valid, stride-1 square-kernel convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ConvGeom {
    pub c_in: usize,
    pub h: usize,
    pub w: usize,
    pub c_out: usize,
    pub k: usize,
}

impl ConvGeom {
    pub fn out_h(&self) -> usize {
        self.h - self.k + 1
    }
    pub fn out_w(&self) -> usize {
        self.w - self.k + 1
    }
    pub fn patch(&self) -> usize {
        self.c_in * self.k * self.k
    }
    pub fn positions(&self) -> usize {
        self.out_h() * self.out_w()
    }
}

fn im2col(input: &[f64], g: &ConvGeom, cols: &mut [f64]) {
    let (oh, ow, p) = (g.out_h(), g.out_w(), g.positions());
    for c in 0..g.c_in {
        for a in 0..g.k {
            for b in 0..g.k {
                let row = ((c * g.k + a) * g.k + b) * p;
                for i in 0..oh {
                    let src = c * g.h * g.w + (i + a) * g.w + b;
                    cols[row + i * ow..row + (i + 1) * ow].copy_from_slice(&input[src..src + ow]);
                }
            }
        }
    }
}

fn col2im_add(cols: &[f64], g: &ConvGeom, grad_input: &mut [f64]) {
    let (oh, ow, p) = (g.out_h(), g.out_w(), g.positions());
    for c in 0..g.c_in {
        for a in 0..g.k {
            for b in 0..g.k {
                let row = ((c * g.k + a) * g.k + b) * p;
                for i in 0..oh {
                    let dst = c * g.h * g.w + (i + a) * g.w + b;
                    let src = &cols[row + i * ow..row + (i + 1) * ow];
                    for (d, s) in grad_input[dst..dst + ow].iter_mut().zip(src) {
                        *d += s;
                    }
                }
            }
        }
    }
}

pub(crate) fn conv_forward_slice(
    input: &[f64],
    kernels: &[f64],
    bias: &[f64],
    g: &ConvGeom,
    cols: &mut Vec<f64>,
    out: &mut [f64],
) {
    let p = g.positions();
    cols.resize(g.patch() * p, 0.0);
    im2col(input, g, cols);
    for (o, row) in out.chunks_exact_mut(p).enumerate() {
        row.fill(bias[o]);
    }
    gemm(g.c_out, g.patch(), p, kernels, (g.patch(), 1), cols, (p, 1), 1.0, out);
}

/// Accumulates kernel and bias gradients and writes the input gradient.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_backward_slice(
    grad_out: &[f64],
    input: &[f64],
    kernels: &[f64],
    g: &ConvGeom,
    cols: &mut Vec<f64>,
    grad_kernels: &mut [f64],
    grad_bias: &mut [f64],
    grad_input: &mut [f64],
) {
    let (p, patch) = (g.positions(), g.patch());
    cols.resize(patch * p, 0.0);
    im2col(input, g, cols);
    for (gb, row) in grad_bias.iter_mut().zip(grad_out.chunks_exact(p)) {
        *gb += row.iter().sum::<f64>();
    }
    // dK[o, r] += sum_p dY[o, p] * cols[r, p]
    gemm(g.c_out, p, patch, grad_out, (p, 1), cols, (1, p), 1.0, grad_kernels);
    // dcols[r, p] = sum_o K[o, r] * dY[o, p]
    gemm(patch, g.c_out, p, kernels, (1, patch), grad_out, (p, 1), 0.0, cols);
    grad_input.fill(0.0);
    col2im_add(cols, g, grad_input);
}

fn conv_geom(input: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<ConvGeom> {
    input.expect_rank(3, "conv2d input")?;
    kernels.expect_rank(4, "conv2d kernels")?;
    let (c_in, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let ks = kernels.shape();
    let (c_out, k) = (ks[0], ks[2]);
    if ks[1] != c_in || ks[3] != k {
        return Err(Error::ShapeMismatch(format!(
            "kernels {ks:?} do not match input channels {c_in}"
        )));
    }
    if k == 0 || k > h.min(w) {
        return Err(Error::ShapeMismatch(format!("kernel {k} exceeds input {h}x{w}")));
    }
    bias.expect_shape(&[c_out], "conv2d bias")?;
    Ok(ConvGeom { c_in, h, w, c_out, k })
}

/// Valid, stride-1 cross-correlation of a `C_in x H x W` input with
/// `C_out x C_in x K x K` kernels.
pub fn conv2d(input: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let g = conv_geom(input, kernels, bias)?;
    let mut out = Tensor::zeros(&[g.c_out, g.out_h(), g.out_w()]);
    let mut cols = Vec::new();
    conv_forward_slice(input.data(), kernels.data(), bias.data(), &g, &mut cols, out.data_mut());
    Ok(out)
}

/// Gradients of [`conv2d`]: `(grad_input, grad_kernels, grad_bias)`.
pub fn conv2d_backward(grad_out: &Tensor, input: &Tensor, kernels: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
    let c_out = kernels.shape().first().copied().unwrap_or(0);
    let g = conv_geom(input, kernels, &Tensor::zeros(&[c_out]))?;
    grad_out.expect_shape(&[g.c_out, g.out_h(), g.out_w()], "conv2d grad_out")?;
    let mut gi = Tensor::zeros(input.shape());
    let mut gk = Tensor::zeros(kernels.shape());
    let mut gb = Tensor::zeros(&[g.c_out]);
    let mut cols = Vec::new();
    conv_backward_slice(
        grad_out.data(),
        input.data(),
        kernels.data(),
        &g,
        &mut cols,
        gk.data_mut(),
        gb.data_mut(),
        gi.data_mut(),
    );
    Ok((gi, gk, gb))
}

/// 2x2 stride-2 max pooling of one `C x H x W` sample; odd trailing
/// rows/columns are dropped. `argmax` receives flat input indices.
pub(crate) fn maxpool_slice(input: &[f64], c: usize, h: usize, w: usize, out: &mut [f64], argmax: &mut [usize]) {
    let (oh, ow) = (h / 2, w / 2);
    for ch in 0..c {
        for i in 0..oh {
            for j in 0..ow {
                let base = ch * h * w + 2 * i * w + 2 * j;
                let mut best = base;
                for cand in [base + 1, base + w, base + w + 1] {
                    if input[cand] > input[best] {
                        best = cand;
                    }
                }
                let o = ch * oh * ow + i * ow + j;
                out[o] = input[best];
                argmax[o] = best;
            }
        }
    }
}

pub fn maxpool2(input: &Tensor) -> Result<(Tensor, Vec<usize>)> {
    input.expect_rank(3, "maxpool2 input")?;
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    if h < 2 || w < 2 {
        return Err(Error::ShapeMismatch(format!("maxpool2 needs H, W >= 2, got {h}x{w}")));
    }
    let mut out = Tensor::zeros(&[c, h / 2, w / 2]);
    let mut argmax = vec![0; out.len()];
    maxpool_slice(input.data(), c, h, w, out.data_mut(), &mut argmax);
    Ok((out, argmax))
}

/// Routes each output gradient to its window's argmax.
pub fn maxpool2_backward(grad_out: &Tensor, argmax: &[usize], input_shape: &[usize]) -> Result<Tensor> {
    if grad_out.len() != argmax.len() {
        return Err(Error::ShapeMismatch("maxpool2 grad/argmax length".into()));
    }
    let mut gi = Tensor::zeros(input_shape);
    for (&g, &idx) in grad_out.data().iter().zip(argmax) {
        gi.data_mut()[idx] += g;
    }
    Ok(gi)
}

pub fn relu(input: &Tensor) -> Tensor {
    let data = input.data().iter().map(|&x| x.max(0.0)).collect();
    Tensor::new(input.shape().to_vec(), data).expect("same shape")
}

/// Passes gradient where the forward input was strictly positive.
pub fn relu_backward(grad_out: &Tensor, input: &Tensor) -> Result<Tensor> {
    grad_out.expect_shape(input.shape(), "relu grad")?;
    let data = grad_out
        .data()
        .iter()
        .zip(input.data())
        .map(|(&g, &x)| if x > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::new(input.shape().to_vec(), data)
}

fn fc_dims(input: &Tensor, weights: &Tensor) -> Result<(usize, usize, usize)> {
    input.expect_rank(2, "fully_connected input")?;
    weights.expect_rank(2, "fully_connected weights")?;
    let (n, f) = (input.shape()[0], input.shape()[1]);
    if weights.shape()[0] != f {
        return Err(Error::ShapeMismatch(format!(
            "input {:?} vs weights {:?}",
            input.shape(),
            weights.shape()
        )));
    }
    Ok((n, f, weights.shape()[1]))
}

/// `N x F` input times `F x U` weights plus bias.
pub fn fully_connected(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (n, f, u) = fc_dims(input, weights)?;
    bias.expect_shape(&[u], "fully_connected bias")?;
    let mut out = Tensor::zeros(&[n, u]);
    for row in out.data_mut().chunks_exact_mut(u) {
        row.copy_from_slice(bias.data());
    }
    gemm(
        n,
        f,
        u,
        input.data(),
        (f, 1),
        weights.data(),
        (u, 1),
        1.0,
        out.data_mut(),
    );
    Ok(out)
}

/// `(grad_input, grad_weights, grad_bias)` of [`fully_connected`].
pub fn fully_connected_backward(
    grad_out: &Tensor,
    input: &Tensor,
    weights: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    let (n, f, u) = fc_dims(input, weights)?;
    grad_out.expect_shape(&[n, u], "fully_connected grad_out")?;
    let mut gi = Tensor::zeros(&[n, f]);
    gemm(
        n,
        u,
        f,
        grad_out.data(),
        (u, 1),
        weights.data(),
        (1, u),
        0.0,
        gi.data_mut(),
    );
    let mut gw = Tensor::zeros(&[f, u]);
    gemm(
        f,
        n,
        u,
        input.data(),
        (1, f),
        grad_out.data(),
        (u, 1),
        0.0,
        gw.data_mut(),
    );
    let mut gb = Tensor::zeros(&[u]);
    for row in grad_out.data().chunks_exact(u) {
        for (b, g) in gb.data_mut().iter_mut().zip(row) {
            *b += g;
        }
    }
    Ok((gi, gw, gb))
}

/// Inverted dropout. Returns the output and the per-element scale mask
/// (`0` or `1 / (1 - p)`); inference mode is the identity.
pub fn dropout(input: &Tensor, p: f64, mode: Mode, rng: &mut Rng) -> Result<(Tensor, Vec<f64>)> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidP(p));
    }
    if mode == Mode::Eval || p == 0.0 {
        return Ok((input.clone(), vec![1.0; input.len()]));
    }
    let keep = 1.0 / (1.0 - p);
    let mask: Vec<f64> = (0..input.len())
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
        .collect();
    let data = input.data().iter().zip(&mask).map(|(x, m)| x * m).collect();
    Ok((Tensor::new(input.shape().to_vec(), data)?, mask))
}

/// Row-wise softmax of `N x C` logits, max-subtracted.
pub fn softmax(logits: &Tensor) -> Result<Tensor> {
    logits.expect_rank(2, "softmax logits")?;
    let c = logits.shape()[1];
    let mut out = logits.clone();
    for row in out.data_mut().chunks_exact_mut(c) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    Ok(out)
}

/// Mean cross-entropy of `N x C` logits against `labels`, and its gradient
/// `(softmax - onehot) / N`.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    logits.expect_rank(2, "softmax_cross_entropy logits")?;
    let (n, c) = (logits.shape()[0], logits.shape()[1]);
    if labels.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
        return Err(Error::BadLabel {
            label: bad,
            n_classes: c,
        });
    }
    let mut grad = Tensor::zeros(&[n, c]);
    let mut loss = 0.0;
    for ((row, g), &y) in logits
        .data()
        .chunks_exact(c)
        .zip(grad.data_mut().chunks_exact_mut(c))
        .zip(labels)
    {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_z = max + sum.ln();
        loss += log_z - row[y];
        for (gj, &v) in g.iter_mut().zip(row) {
            *gj = (v - log_z).exp() / n as f64;
        }
        g[y] -= 1.0 / n as f64;
    }
    Ok((loss / n as f64, grad))
}
