use rayon::prelude::*;

use crate::error::{KernelError, Result};
use crate::tensor::{LayerGrads, Tensor};

pub const BN_EPS: f32 = 1e-5;
pub const BN_MOMENTUM: f32 = 0.9;

/// Values saved by the training-mode forward pass for the backward pass.
#[derive(Clone, Debug)]
pub struct BnCache {
    x_hat: Tensor,
    inv_std: Vec<f32>,
}

fn channel_stats(input: &Tensor, c: usize) -> (Vec<f32>, Vec<f32>) {
    let rows = input.numel() / c;
    let mut mean = vec![0.0f64; c];
    for row in input.data().chunks_exact(c) {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v as f64;
        }
    }
    for m in &mut mean {
        *m /= rows as f64;
    }
    // Biased variance: divide by the element count, not count - 1.
    let mut var = vec![0.0f64; c];
    for row in input.data().chunks_exact(c) {
        for ((v, &x), &m) in var.iter_mut().zip(row).zip(&mean) {
            let d = x as f64 - m;
            *v += d * d;
        }
    }
    for v in &mut var {
        *v /= rows as f64;
    }
    (
        mean.into_iter().map(|m| m as f32).collect(),
        var.into_iter().map(|v| v as f32).collect(),
    )
}

fn check_bn_shapes(input: &Tensor, gamma: &Tensor, beta: &Tensor) -> Result<usize> {
    let (_, _, _, c) = input.dims4("batchnorm input")?;
    if gamma.shape() != [c] || beta.shape() != [c] {
        return Err(KernelError::shape(
            "batchnorm",
            format!(
                "gamma {:?} / beta {:?} must both be [{c}]",
                gamma.shape(),
                beta.shape()
            ),
        ));
    }
    Ok(c)
}

fn affine_normalize(
    input: &Tensor,
    mean: &[f32],
    inv_std: &[f32],
    gamma: &Tensor,
    beta: &Tensor,
) -> (Tensor, Tensor) {
    let c = mean.len();
    let mut x_hat = vec![0.0f32; input.numel()];
    x_hat
        .par_chunks_mut(c)
        .zip(input.data().par_chunks(c))
        .for_each(|(out_row, in_row)| {
            for ci in 0..c {
                out_row[ci] = (in_row[ci] - mean[ci]) * inv_std[ci];
            }
        });
    let g = gamma.data();
    let b = beta.data();
    let mut out = vec![0.0f32; input.numel()];
    out.par_chunks_mut(c)
        .zip(x_hat.par_chunks(c))
        .for_each(|(out_row, xh_row)| {
            for ci in 0..c {
                out_row[ci] = g[ci] * xh_row[ci] + b[ci];
            }
        });
    (
        Tensor::new(input.shape().to_vec(), out).expect("bn out shape"),
        Tensor::new(input.shape().to_vec(), x_hat).expect("bn x_hat shape"),
    )
}

/// Training-mode batch normalization over the channel axis of an NHWC
/// tensor. Normalizes with the batch statistics, folds them into the running
/// statistics as `running = momentum * running + (1 - momentum) * batch`,
/// and returns the cache needed by [`batchnorm_backward`].
pub fn batchnorm_train(
    input: &Tensor,
    gamma: &Tensor,
    beta: &Tensor,
    running_mean: &mut Tensor,
    running_var: &mut Tensor,
    momentum: f32,
    eps: f32,
) -> Result<(Tensor, BnCache)> {
    let c = check_bn_shapes(input, gamma, beta)?;
    if running_mean.shape() != [c] || running_var.shape() != [c] {
        return Err(KernelError::shape(
            "batchnorm",
            "running statistics must match the channel count".to_string(),
        ));
    }
    let (mean, var) = channel_stats(input, c);
    let inv_std: Vec<f32> = var.iter().map(|&v| 1.0 / (v + eps).sqrt()).collect();
    for (r, &b) in running_mean.data_mut().iter_mut().zip(&mean) {
        *r = momentum * *r + (1.0 - momentum) * b;
    }
    for (r, &b) in running_var.data_mut().iter_mut().zip(&var) {
        *r = momentum * *r + (1.0 - momentum) * b;
    }
    let (out, x_hat) = affine_normalize(input, &mean, &inv_std, gamma, beta);
    Ok((out, BnCache { x_hat, inv_std }))
}

/// Inference-mode batch normalization: normalizes with the stored running
/// statistics and leaves them untouched.
pub fn batchnorm_infer(
    input: &Tensor,
    gamma: &Tensor,
    beta: &Tensor,
    running_mean: &Tensor,
    running_var: &Tensor,
    eps: f32,
) -> Result<Tensor> {
    let c = check_bn_shapes(input, gamma, beta)?;
    if running_mean.shape() != [c] || running_var.shape() != [c] {
        return Err(KernelError::shape(
            "batchnorm",
            "running statistics must match the channel count".to_string(),
        ));
    }
    let inv_std: Vec<f32> = running_var
        .data()
        .iter()
        .map(|&v| 1.0 / (v + eps).sqrt())
        .collect();
    let (out, _) = affine_normalize(input, running_mean.data(), &inv_std, gamma, beta);
    Ok(out)
}

/// Gradients of [`batchnorm_train`] with respect to its input, gamma
/// ("gamma"), and beta ("beta").
///
/// Uses the closed form for the batch-statistics path:
/// `dx = gamma * inv_std * (dy - mean(dy) - x_hat * mean(dy * x_hat))`.
pub fn batchnorm_backward(cache: &BnCache, gamma: &Tensor, d_out: &Tensor) -> Result<LayerGrads> {
    let x_hat = &cache.x_hat;
    if d_out.shape() != x_hat.shape() {
        return Err(KernelError::shape(
            "batchnorm backward",
            format!(
                "d_out shape {:?} does not match cached activation {:?}",
                d_out.shape(),
                x_hat.shape()
            ),
        ));
    }
    let c = cache.inv_std.len();
    let rows = x_hat.numel() / c;

    let mut sum_dy = vec![0.0f64; c];
    let mut sum_dy_xhat = vec![0.0f64; c];
    for (dy_row, xh_row) in d_out
        .data()
        .chunks_exact(c)
        .zip(x_hat.data().chunks_exact(c))
    {
        for ci in 0..c {
            sum_dy[ci] += dy_row[ci] as f64;
            sum_dy_xhat[ci] += (dy_row[ci] * xh_row[ci]) as f64;
        }
    }
    let d_beta: Vec<f32> = sum_dy.iter().map(|&v| v as f32).collect();
    let d_gamma: Vec<f32> = sum_dy_xhat.iter().map(|&v| v as f32).collect();
    let mean_dy: Vec<f32> = sum_dy.iter().map(|&v| (v / rows as f64) as f32).collect();
    let mean_dy_xhat: Vec<f32> = sum_dy_xhat
        .iter()
        .map(|&v| (v / rows as f64) as f32)
        .collect();

    let g = gamma.data();
    let inv_std = &cache.inv_std;
    let mut dx = vec![0.0f32; x_hat.numel()];
    dx.par_chunks_mut(c)
        .zip(d_out.data().par_chunks(c))
        .zip(x_hat.data().par_chunks(c))
        .for_each(|((dx_row, dy_row), xh_row)| {
            for ci in 0..c {
                dx_row[ci] = g[ci]
                    * inv_std[ci]
                    * (dy_row[ci] - mean_dy[ci] - xh_row[ci] * mean_dy_xhat[ci]);
            }
        });

    Ok(LayerGrads {
        d_input: Tensor::new(x_hat.shape().to_vec(), dx)?,
        d_params: vec![
            ("gamma", Tensor::new(vec![c], d_gamma)?),
            ("beta", Tensor::new(vec![c], d_beta)?),
        ],
    })
}
