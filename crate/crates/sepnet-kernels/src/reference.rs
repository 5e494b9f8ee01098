//! Naive direct-loop implementations kept as oracles for the optimized
//! kernels. Slow on purpose: each follows the textbook definition with no
//! lowering tricks, so a bug in the fast path and the oracle would have to
//! coincide to slip through.

use crate::conv::{out_dim, pad_before, Padding};
use crate::error::Result;
use crate::tensor::{idx4, Tensor};

/// Textbook `n x k * k x m` triple loop.
pub fn matmul_naive(a: &[f32], b: &[f32], n: usize, k: usize, m: usize) -> Vec<f32> {
    let mut out = vec![0.0f32; n * m];
    for i in 0..n {
        for p in 0..k {
            let av = a[i * k + p];
            for q in 0..m {
                out[i * m + q] += av * b[p * m + q];
            }
        }
    }
    out
}

/// Direct six-loop convolution over NHWC input with `[kh, kw, cin, cout]`
/// weights.
pub fn conv2d_naive(
    input: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    stride: usize,
    padding: Padding,
) -> Result<Tensor> {
    let (n, h, w, cin) = input.dims4("reference conv input")?;
    let ws = weights.shape();
    let (kh, kw, cout) = (ws[0], ws[1], ws[3]);
    let oh = out_dim(h, kh, stride, padding)?;
    let ow = out_dim(w, kw, stride, padding)?;
    let pad_h = pad_before(h, oh, kh, stride, padding);
    let pad_w = pad_before(w, ow, kw, stride, padding);
    let x = input.data();
    let wt = weights.data();
    let b = bias.data();
    let mut out = vec![0.0f32; n * oh * ow * cout];
    for n_i in 0..n {
        for oh_i in 0..oh {
            for ow_i in 0..ow {
                for co in 0..cout {
                    let mut acc = b[co];
                    for ki in 0..kh {
                        let ih = (oh_i * stride + ki) as isize - pad_h as isize;
                        if ih < 0 || ih >= h as isize {
                            continue;
                        }
                        for kj in 0..kw {
                            let iw = (ow_i * stride + kj) as isize - pad_w as isize;
                            if iw < 0 || iw >= w as isize {
                                continue;
                            }
                            for ci in 0..cin {
                                acc += x
                                    [idx4(&[n, h, w, cin], n_i, ih as usize, iw as usize, ci)]
                                    * wt[((ki * kw + kj) * cin + ci) * cout + co];
                            }
                        }
                    }
                    out[idx4(&[n, oh, ow, cout], n_i, oh_i, ow_i, co)] = acc;
                }
            }
        }
    }
    Tensor::new(vec![n, oh, ow, cout], out)
}

/// Direct per-channel depthwise convolution with `[kh, kw, c]` weights.
pub fn depthwise_naive(
    input: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    stride: usize,
    padding: Padding,
) -> Result<Tensor> {
    let (n, h, w, c) = input.dims4("reference depthwise input")?;
    let ws = weights.shape();
    let (kh, kw) = (ws[0], ws[1]);
    let oh = out_dim(h, kh, stride, padding)?;
    let ow = out_dim(w, kw, stride, padding)?;
    let pad_h = pad_before(h, oh, kh, stride, padding);
    let pad_w = pad_before(w, ow, kw, stride, padding);
    let x = input.data();
    let wt = weights.data();
    let b = bias.data();
    let mut out = vec![0.0f32; n * oh * ow * c];
    for n_i in 0..n {
        for oh_i in 0..oh {
            for ow_i in 0..ow {
                for ci in 0..c {
                    let mut acc = b[ci];
                    for ki in 0..kh {
                        let ih = (oh_i * stride + ki) as isize - pad_h as isize;
                        if ih < 0 || ih >= h as isize {
                            continue;
                        }
                        for kj in 0..kw {
                            let iw = (ow_i * stride + kj) as isize - pad_w as isize;
                            if iw < 0 || iw >= w as isize {
                                continue;
                            }
                            acc += x[idx4(&[n, h, w, c], n_i, ih as usize, iw as usize, ci)]
                                * wt[(ki * kw + kj) * c + ci];
                        }
                    }
                    out[idx4(&[n, oh, ow, c], n_i, oh_i, ow_i, ci)] = acc;
                }
            }
        }
    }
    Tensor::new(vec![n, oh, ow, c], out)
}
