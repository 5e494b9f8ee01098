//! Slow double-precision mirror of the training-mode forward pass.
//!
//! Gradient checks against finite differences need a loss function that is
//! smooth at step sizes far below what `f32` arithmetic can resolve: the
//! production forward pass quantizes the loss at roughly 1e-7 relative, and
//! chains of batch normalization make the surface curved enough that no
//! single-precision step size gives a trustworthy central difference for the
//! early layers. This module re-evaluates the same mathematical function with
//! naive loops in `f64`, so tests can take tiny, well-conditioned steps and
//! compare the production backward pass against the true local derivative.
//!
//! The code deliberately shares nothing with the production kernels: plain
//! nested loops, no im2col, no parallelism. It follows the layer definitions
//! directly and is the second, independent route for the composed-model
//! gradient checks.

use std::collections::BTreeMap;

use sepnet_kernels::{Rng, BN_EPS};

use crate::error::{ModelError, Result};
use crate::model::Model;
use crate::plan::{plan, ArchPlan, PlanStep};

/// Double-precision copy of a model's parameters plus the plan needed to
/// walk them. Parameters are keyed by the same `layerNN.suffix` names the
/// model exposes, so tests can perturb one coordinate here and compare
/// against the analytic gradient reported under the same name.
pub struct ReferenceNet {
    arch: ArchPlan,
    resolution: usize,
    params: BTreeMap<String, Vec<f64>>,
}

/// NHWC offset helper for the reference buffers.
fn at(h: usize, w: usize, c: usize, n: usize, y: usize, x: usize, ch: usize) -> usize {
    debug_assert!(y < h && x < w && ch < c);
    ((n * h + y) * w + x) * c + ch
}

/// Mirrors the production "same" padding rule: the output keeps
/// `ceil(in / stride)` positions and any odd padding goes after the input.
fn same_geometry(in_dim: usize, k: usize, stride: usize) -> (usize, usize) {
    let out = in_dim.div_ceil(stride);
    let pad_total = ((out - 1) * stride + k).saturating_sub(in_dim);
    (out, pad_total / 2)
}

impl ReferenceNet {
    /// Snapshots `model`'s parameters in double precision.
    pub fn from_model(model: &Model) -> Result<Self> {
        let arch = plan(&model.config)?;
        let mut params = BTreeMap::new();
        for (name, tensor) in model.state() {
            let values: Vec<f64> = tensor.data().iter().map(|&v| v as f64).collect();
            params.insert(name, values);
        }
        Ok(ReferenceNet {
            arch,
            resolution: model.config.resolution,
            params,
        })
    }

    /// Mutable access to one parameter vector, for finite-difference probes.
    pub fn param_mut(&mut self, name: &str) -> Option<&mut Vec<f64>> {
        self.params.get_mut(name)
    }

    fn param(&self, step: usize, suffix: &str) -> Result<&[f64]> {
        let name = format!("layer{step:02}.{suffix}");
        self.params
            .get(&name)
            .map(Vec::as_slice)
            .ok_or_else(|| ModelError::InvalidConfig(format!("missing parameter {name}")))
    }

    /// Training-mode loss (mean cross-entropy plus the weight penalty) for a
    /// batch of `n` images, each `resolution x resolution x 3`, in NHWC
    /// order. `rng` must be seeded exactly like the one handed to the
    /// production forward pass: dropout is the only consumer on either side,
    /// so the two paths draw identical masks.
    pub fn loss(&self, input: &[f64], n: usize, labels: &[usize], rng: &mut Rng) -> Result<f64> {
        let res = self.resolution;
        if input.len() != n * res * res * 3 {
            return Err(ModelError::InvalidConfig(format!(
                "input length {} does not match {n} images at resolution {res}",
                input.len()
            )));
        }
        if labels.len() != n {
            return Err(ModelError::InvalidConfig(format!(
                "{} labels for {n} images",
                labels.len()
            )));
        }

        let mut buf = input.to_vec();
        let (mut h, mut w, mut c) = (res, res, 3usize);
        let mut penalty = 0.0f64;

        for (step, layer) in self.arch.steps.iter().enumerate() {
            match *layer {
                PlanStep::Conv {
                    kh,
                    kw,
                    cin,
                    cout,
                    stride,
                    out_h,
                    out_w,
                } => {
                    debug_assert_eq!((h, w, c), (h, w, cin));
                    let weights = self.param(step, "weights")?;
                    let bias = self.param(step, "bias")?;
                    let conv = conv_same(&buf, n, h, w, cin, weights, bias, kh, kw, cout, stride);
                    buf = self.bn_relu(step, conv, n, out_h, out_w, cout)?;
                    h = out_h;
                    w = out_w;
                    c = cout;
                }
                PlanStep::Depthwise {
                    k,
                    c: channels,
                    stride,
                    out_h,
                    out_w,
                } => {
                    let weights = self.param(step, "weights")?;
                    let bias = self.param(step, "bias")?;
                    let conv = depthwise_same(&buf, n, h, w, channels, weights, bias, k, stride);
                    buf = self.bn_relu(step, conv, n, out_h, out_w, channels)?;
                    h = out_h;
                    w = out_w;
                    c = channels;
                }
                PlanStep::GlobalAvgPool { .. } => {
                    let mut pooled = vec![0.0f64; n * c];
                    let scale = 1.0 / (h * w) as f64;
                    for img in 0..n {
                        for y in 0..h {
                            for x in 0..w {
                                for ch in 0..c {
                                    pooled[img * c + ch] += buf[at(h, w, c, img, y, x, ch)] * scale;
                                }
                            }
                        }
                    }
                    buf = pooled;
                    h = 1;
                    w = 1;
                }
                PlanStep::Dense { cin, cout, relu, l2 } => {
                    let weights = self.param(step, "weights")?;
                    let bias = self.param(step, "bias")?;
                    let mut out = vec![0.0f64; n * cout];
                    for row in 0..n {
                        for m in 0..cout {
                            let mut acc = bias[m];
                            for k in 0..cin {
                                acc += buf[row * cin + k] * weights[k * cout + m];
                            }
                            out[row * cout + m] = if relu { acc.max(0.0) } else { acc };
                        }
                    }
                    if l2 > 0.0 {
                        let sum_sq: f64 = weights.iter().map(|&v| v * v).sum();
                        penalty += l2 as f64 * sum_sq;
                    }
                    buf = out;
                    c = cout;
                }
                PlanStep::Dropout { rate } => {
                    let scale = 1.0 / (1.0 - rate as f64);
                    for value in buf.iter_mut() {
                        // Same draw and comparison as the production kernel,
                        // so both paths see the same mask.
                        let keep = rng.uniform() >= rate;
                        *value = if keep { *value * scale } else { 0.0 };
                    }
                }
            }
        }

        // Mean softmax cross-entropy over the batch.
        let classes = c;
        let mut ce = 0.0f64;
        for row in 0..n {
            let logits = &buf[row * classes..(row + 1) * classes];
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let denom: f64 = logits.iter().map(|&v| (v - max).exp()).sum();
            if labels[row] >= classes {
                return Err(ModelError::InvalidConfig(format!(
                    "label {} out of range for {classes} classes",
                    labels[row]
                )));
            }
            ce -= (buf[row * classes + labels[row]] - max) - denom.ln();
        }
        Ok(ce / n as f64 + penalty)
    }

    /// Training-mode batch normalization followed by ReLU.
    fn bn_relu(
        &self,
        step: usize,
        mut buf: Vec<f64>,
        n: usize,
        h: usize,
        w: usize,
        c: usize,
    ) -> Result<Vec<f64>> {
        let gamma = self.param(step, "gamma")?;
        let beta = self.param(step, "beta")?;
        let rows = n * h * w;
        let mut mean = vec![0.0f64; c];
        let mut var = vec![0.0f64; c];
        for row in 0..rows {
            for ch in 0..c {
                mean[ch] += buf[row * c + ch];
            }
        }
        for m in mean.iter_mut() {
            *m /= rows as f64;
        }
        for row in 0..rows {
            for ch in 0..c {
                let d = buf[row * c + ch] - mean[ch];
                var[ch] += d * d;
            }
        }
        for v in var.iter_mut() {
            *v /= rows as f64;
        }
        for row in 0..rows {
            for ch in 0..c {
                let x_hat = (buf[row * c + ch] - mean[ch]) / (var[ch] + BN_EPS as f64).sqrt();
                buf[row * c + ch] = (gamma[ch] * x_hat + beta[ch]).max(0.0);
            }
        }
        Ok(buf)
    }
}

#[allow(clippy::too_many_arguments)]
fn conv_same(
    input: &[f64],
    n: usize,
    h: usize,
    w: usize,
    cin: usize,
    weights: &[f64],
    bias: &[f64],
    kh: usize,
    kw: usize,
    cout: usize,
    stride: usize,
) -> Vec<f64> {
    let (oh, pad_top) = same_geometry(h, kh, stride);
    let (ow, pad_left) = same_geometry(w, kw, stride);
    let mut out = vec![0.0f64; n * oh * ow * cout];
    for img in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                for co in 0..cout {
                    let mut acc = bias[co];
                    for ky in 0..kh {
                        let iy = (oy * stride + ky) as isize - pad_top as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..kw {
                            let ix = (ox * stride + kx) as isize - pad_left as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            for ci in 0..cin {
                                let x = input[at(h, w, cin, img, iy as usize, ix as usize, ci)];
                                let wt = weights[((ky * kw + kx) * cin + ci) * cout + co];
                                acc += x * wt;
                            }
                        }
                    }
                    out[at(oh, ow, cout, img, oy, ox, co)] = acc;
                }
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn depthwise_same(
    input: &[f64],
    n: usize,
    h: usize,
    w: usize,
    c: usize,
    weights: &[f64],
    bias: &[f64],
    k: usize,
    stride: usize,
) -> Vec<f64> {
    let (oh, pad_top) = same_geometry(h, k, stride);
    let (ow, pad_left) = same_geometry(w, k, stride);
    let mut out = vec![0.0f64; n * oh * ow * c];
    for img in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let mut acc = bias[ch];
                    for ky in 0..k {
                        let iy = (oy * stride + ky) as isize - pad_top as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..k {
                            let ix = (ox * stride + kx) as isize - pad_left as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            let x = input[at(h, w, c, img, iy as usize, ix as usize, ch)];
                            acc += x * weights[(ky * k + kx) * c + ch];
                        }
                    }
                    out[at(oh, ow, c, img, oy, ox, ch)] = acc;
                }
            }
        }
    }
    out
}
