use rayon::prelude::*;

use crate::error::{KernelError, Result};
use crate::matmul::{matmul, matmul_a_bt, matmul_at_b};
use crate::tensor::{idx4, LayerGrads, Tensor};

/// Spatial padding mode.
///
/// `Same` keeps `out = ceil(in / stride)` by zero-padding, splitting the pad
/// evenly with the extra pixel on the high side. `Valid` applies no padding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Padding {
    Same,
    Valid,
}

pub(crate) fn out_dim(in_dim: usize, k: usize, stride: usize, padding: Padding) -> Result<usize> {
    if stride == 0 {
        return Err(KernelError::arg("conv", "stride must be positive"));
    }
    match padding {
        Padding::Same => Ok(in_dim.div_ceil(stride)),
        Padding::Valid => {
            if in_dim < k {
                return Err(KernelError::arg(
                    "conv",
                    format!("input dim {in_dim} smaller than kernel {k} with valid padding"),
                ));
            }
            Ok((in_dim - k) / stride + 1)
        }
    }
}

pub(crate) fn pad_before(
    in_dim: usize,
    out: usize,
    k: usize,
    stride: usize,
    padding: Padding,
) -> usize {
    match padding {
        Padding::Same => {
            let span = (out - 1) * stride + k;
            span.saturating_sub(in_dim) / 2
        }
        Padding::Valid => 0,
    }
}

struct ConvGeom {
    n: usize,
    h: usize,
    w: usize,
    cin: usize,
    kh: usize,
    kw: usize,
    cout: usize,
    oh: usize,
    ow: usize,
    pad_h: usize,
    pad_w: usize,
    stride: usize,
}

fn conv_geometry(
    input: &Tensor,
    weights: &Tensor,
    stride: usize,
    padding: Padding,
) -> Result<ConvGeom> {
    let (n, h, w, cin) = input.dims4("conv input")?;
    let ws = weights.shape();
    if ws.len() != 4 {
        return Err(KernelError::shape(
            "conv weights",
            format!("expected [kh, kw, cin, cout], got {ws:?}"),
        ));
    }
    let (kh, kw, wcin, cout) = (ws[0], ws[1], ws[2], ws[3]);
    if wcin != cin {
        return Err(KernelError::shape(
            "conv",
            format!("input has {cin} channels but weights expect {wcin}"),
        ));
    }
    let oh = out_dim(h, kh, stride, padding)?;
    let ow = out_dim(w, kw, stride, padding)?;
    Ok(ConvGeom {
        n,
        h,
        w,
        cin,
        kh,
        kw,
        cout,
        oh,
        ow,
        pad_h: pad_before(h, oh, kh, stride, padding),
        pad_w: pad_before(w, ow, kw, stride, padding),
        stride,
    })
}

/// Lowers the input to a `(n*oh*ow) x (kh*kw*cin)` matrix whose rows are the
/// receptive-field patches, zero-filled outside the image. A `[kh, kw, cin,
/// cout]` row-major weight tensor is already the matching right-hand matmul
/// operand, so convolution reduces to one matmul.
fn im2col(input: &Tensor, g: &ConvGeom) -> Vec<f32> {
    let kk = g.kh * g.kw * g.cin;
    let mut cols = vec![0.0f32; g.n * g.oh * g.ow * kk];
    let data = input.data();
    cols.par_chunks_mut(kk).enumerate().for_each(|(r, row)| {
        let ow_i = r % g.ow;
        let rest = r / g.ow;
        let oh_i = rest % g.oh;
        let n_i = rest / g.oh;
        for ki in 0..g.kh {
            let ih = (oh_i * g.stride + ki) as isize - g.pad_h as isize;
            if ih < 0 || ih >= g.h as isize {
                continue;
            }
            for kj in 0..g.kw {
                let iw = (ow_i * g.stride + kj) as isize - g.pad_w as isize;
                if iw < 0 || iw >= g.w as isize {
                    continue;
                }
                let src = idx4(
                    &[g.n, g.h, g.w, g.cin],
                    n_i,
                    ih as usize,
                    iw as usize,
                    0,
                );
                let dst = (ki * g.kw + kj) * g.cin;
                row[dst..dst + g.cin].copy_from_slice(&data[src..src + g.cin]);
            }
        }
    });
    cols
}

/// Adjoint of [`im2col`]: accumulates patch-matrix gradients back onto the
/// input grid. Written as a gather over input positions so rows can run in
/// parallel with a fixed per-element accumulation order.
fn col2im(d_cols: &[f32], g: &ConvGeom) -> Tensor {
    let kk = g.kh * g.kw * g.cin;
    let mut d_input = vec![0.0f32; g.n * g.h * g.w * g.cin];
    d_input
        .par_chunks_mut(g.w * g.cin)
        .enumerate()
        .for_each(|(row_idx, row)| {
            let h_i = row_idx % g.h;
            let n_i = row_idx / g.h;
            for ki in 0..g.kh {
                let oh_num = h_i as isize + g.pad_h as isize - ki as isize;
                if oh_num < 0 || oh_num % g.stride as isize != 0 {
                    continue;
                }
                let oh_i = (oh_num / g.stride as isize) as usize;
                if oh_i >= g.oh {
                    continue;
                }
                for w_i in 0..g.w {
                    for kj in 0..g.kw {
                        let ow_num = w_i as isize + g.pad_w as isize - kj as isize;
                        if ow_num < 0 || ow_num % g.stride as isize != 0 {
                            continue;
                        }
                        let ow_i = (ow_num / g.stride as isize) as usize;
                        if ow_i >= g.ow {
                            continue;
                        }
                        let r = (n_i * g.oh + oh_i) * g.ow + ow_i;
                        let src = r * kk + (ki * g.kw + kj) * g.cin;
                        let dst = w_i * g.cin;
                        for ci in 0..g.cin {
                            row[dst + ci] += d_cols[src + ci];
                        }
                    }
                }
            }
        });
    Tensor::new(vec![g.n, g.h, g.w, g.cin], d_input).expect("col2im shape")
}

fn is_pointwise(g: &ConvGeom) -> bool {
    g.kh == 1 && g.kw == 1 && g.stride == 1
}

/// 2-D convolution over an NHWC input with `[kh, kw, cin, cout]` weights and
/// a per-output-channel bias.
pub fn conv2d(
    input: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    stride: usize,
    padding: Padding,
) -> Result<Tensor> {
    let g = conv_geometry(input, weights, stride, padding)?;
    if bias.shape() != [g.cout] {
        return Err(KernelError::shape(
            "conv bias",
            format!("expected [{}], got {:?}", g.cout, bias.shape()),
        ));
    }
    let rows = g.n * g.oh * g.ow;
    let kk = g.kh * g.kw * g.cin;
    let mut out = if is_pointwise(&g) {
        matmul(input.data(), weights.data(), rows, kk, g.cout)
    } else {
        let cols = im2col(input, &g);
        matmul(&cols, weights.data(), rows, kk, g.cout)
    };
    let b = bias.data();
    out.par_chunks_mut(g.cout).for_each(|row| {
        for (o, &bv) in row.iter_mut().zip(b) {
            *o += bv;
        }
    });
    Tensor::new(vec![g.n, g.oh, g.ow, g.cout], out)
}

/// Gradients of [`conv2d`] with respect to its input, weights ("weights"),
/// and bias ("bias").
pub fn conv2d_backward(
    input: &Tensor,
    weights: &Tensor,
    d_out: &Tensor,
    stride: usize,
    padding: Padding,
) -> Result<LayerGrads> {
    let g = conv_geometry(input, weights, stride, padding)?;
    let (dn, doh, dow, dcout) = d_out.dims4("conv d_out")?;
    if (dn, doh, dow, dcout) != (g.n, g.oh, g.ow, g.cout) {
        return Err(KernelError::shape(
            "conv backward",
            format!(
                "d_out shape {:?} does not match forward output [{}, {}, {}, {}]",
                d_out.shape(),
                g.n,
                g.oh,
                g.ow,
                g.cout
            ),
        ));
    }
    let rows = g.n * g.oh * g.ow;
    let kk = g.kh * g.kw * g.cin;

    let mut d_bias = vec![0.0f32; g.cout];
    for row in d_out.data().chunks_exact(g.cout) {
        for (b, &v) in d_bias.iter_mut().zip(row) {
            *b += v;
        }
    }

    let (d_weights, d_input) = if is_pointwise(&g) {
        let dw = matmul_at_b(input.data(), d_out.data(), rows, kk, g.cout);
        let dx = matmul_a_bt(d_out.data(), weights.data(), rows, g.cout, kk);
        (
            dw,
            Tensor::new(vec![g.n, g.h, g.w, g.cin], dx).expect("pointwise d_input shape"),
        )
    } else {
        let cols = im2col(input, &g);
        let dw = matmul_at_b(&cols, d_out.data(), rows, kk, g.cout);
        let d_cols = matmul_a_bt(d_out.data(), weights.data(), rows, g.cout, kk);
        (dw, col2im(&d_cols, &g))
    };

    Ok(LayerGrads {
        d_input,
        d_params: vec![
            (
                "weights",
                Tensor::new(vec![g.kh, g.kw, g.cin, g.cout], d_weights)?,
            ),
            ("bias", Tensor::new(vec![g.cout], d_bias)?),
        ],
    })
}

/// Depthwise 2-D convolution: each input channel is filtered by its own
/// `kh x kw` kernel (channel multiplier 1), weights `[kh, kw, c]`, bias `[c]`.
pub fn depthwise_conv2d(
    input: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    stride: usize,
    padding: Padding,
) -> Result<Tensor> {
    let (n, h, w, c) = input.dims4("depthwise input")?;
    let ws = weights.shape();
    if ws.len() != 3 || ws[2] != c {
        return Err(KernelError::shape(
            "depthwise weights",
            format!("expected [kh, kw, {c}], got {ws:?}"),
        ));
    }
    let (kh, kw) = (ws[0], ws[1]);
    if bias.shape() != [c] {
        return Err(KernelError::shape(
            "depthwise bias",
            format!("expected [{c}], got {:?}", bias.shape()),
        ));
    }
    let oh = out_dim(h, kh, stride, padding)?;
    let ow = out_dim(w, kw, stride, padding)?;
    let pad_h = pad_before(h, oh, kh, stride, padding);
    let pad_w = pad_before(w, ow, kw, stride, padding);

    let data = input.data();
    let wdata = weights.data();
    let b = bias.data();
    let mut out = vec![0.0f32; n * oh * ow * c];
    out.par_chunks_mut(ow * c)
        .enumerate()
        .for_each(|(row_idx, row)| {
            let oh_i = row_idx % oh;
            let n_i = row_idx / oh;
            for ow_i in 0..ow {
                let dst = ow_i * c;
                row[dst..dst + c].copy_from_slice(b);
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
                        let src = idx4(&[n, h, w, c], n_i, ih as usize, iw as usize, 0);
                        let wk = (ki * kw + kj) * c;
                        for ci in 0..c {
                            row[dst + ci] += data[src + ci] * wdata[wk + ci];
                        }
                    }
                }
            }
        });
    Tensor::new(vec![n, oh, ow, c], out)
}

/// Gradients of [`depthwise_conv2d`] with respect to its input, weights
/// ("weights"), and bias ("bias").
pub fn depthwise_conv2d_backward(
    input: &Tensor,
    weights: &Tensor,
    d_out: &Tensor,
    stride: usize,
    padding: Padding,
) -> Result<LayerGrads> {
    let (n, h, w, c) = input.dims4("depthwise input")?;
    let ws = weights.shape();
    if ws.len() != 3 || ws[2] != c {
        return Err(KernelError::shape(
            "depthwise weights",
            format!("expected [kh, kw, {c}], got {ws:?}"),
        ));
    }
    let (kh, kw) = (ws[0], ws[1]);
    let oh = out_dim(h, kh, stride, padding)?;
    let ow = out_dim(w, kw, stride, padding)?;
    let (dn, doh, dow, dc) = d_out.dims4("depthwise d_out")?;
    if (dn, doh, dow, dc) != (n, oh, ow, c) {
        return Err(KernelError::shape(
            "depthwise backward",
            format!(
                "d_out shape {:?} does not match forward output [{n}, {oh}, {ow}, {c}]",
                d_out.shape()
            ),
        ));
    }
    let pad_h = pad_before(h, oh, kh, stride, padding);
    let pad_w = pad_before(w, ow, kw, stride, padding);

    let x = input.data();
    let wdata = weights.data();
    let dy = d_out.data();

    let mut d_bias = vec![0.0f32; c];
    for row in dy.chunks_exact(c) {
        for (b, &v) in d_bias.iter_mut().zip(row) {
            *b += v;
        }
    }

    // One independent reduction per channel keeps the accumulation order
    // fixed under any thread count; the [c, kh*kw] scratch is transposed to
    // the [kh, kw, c] weight layout afterwards.
    let mut d_weights = vec![0.0f32; kh * kw * c];
    let mut dw_by_channel = vec![0.0f32; c * kh * kw];
    dw_by_channel
        .par_chunks_mut(kh * kw)
        .enumerate()
        .for_each(|(ci, acc)| {
            for n_i in 0..n {
                for oh_i in 0..oh {
                    for ow_i in 0..ow {
                        let g = dy[idx4(&[n, oh, ow, c], n_i, oh_i, ow_i, ci)];
                        if g == 0.0 {
                            continue;
                        }
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
                                acc[ki * kw + kj] +=
                                    g * x[idx4(&[n, h, w, c], n_i, ih as usize, iw as usize, ci)];
                            }
                        }
                    }
                }
            }
        });
    for ci in 0..c {
        for k in 0..kh * kw {
            d_weights[k * c + ci] = dw_by_channel[ci * kh * kw + k];
        }
    }

    let mut d_input = vec![0.0f32; n * h * w * c];
    d_input
        .par_chunks_mut(w * c)
        .enumerate()
        .for_each(|(row_idx, row)| {
            let h_i = row_idx % h;
            let n_i = row_idx / h;
            for ki in 0..kh {
                let oh_num = h_i as isize + pad_h as isize - ki as isize;
                if oh_num < 0 || oh_num % stride as isize != 0 {
                    continue;
                }
                let oh_i = (oh_num / stride as isize) as usize;
                if oh_i >= oh {
                    continue;
                }
                for w_i in 0..w {
                    for kj in 0..kw {
                        let ow_num = w_i as isize + pad_w as isize - kj as isize;
                        if ow_num < 0 || ow_num % stride as isize != 0 {
                            continue;
                        }
                        let ow_i = (ow_num / stride as isize) as usize;
                        if ow_i >= ow {
                            continue;
                        }
                        let src = idx4(&[n, oh, ow, c], n_i, oh_i, ow_i, 0);
                        let wk = (ki * kw + kj) * c;
                        let dst = w_i * c;
                        for ci in 0..c {
                            row[dst + ci] += dy[src + ci] * wdata[wk + ci];
                        }
                    }
                }
            }
        });

    Ok(LayerGrads {
        d_input: Tensor::new(vec![n, h, w, c], d_input)?,
        d_params: vec![
            ("weights", Tensor::new(vec![kh, kw, c], d_weights)?),
            ("bias", Tensor::new(vec![c], d_bias)?),
        ],
    })
}
