use crate::error::{KernelError, Result};
use crate::tensor::{idx4, Tensor};

/// Averages each channel over the full spatial extent: `[n, h, w, c] ->
/// [n, c]`.
pub fn global_avg_pool(input: &Tensor) -> Result<Tensor> {
    let (n, h, w, c) = input.dims4("global_avg_pool input")?;
    let scale = 1.0 / (h * w) as f32;
    let data = input.data();
    let mut out = vec![0.0f32; n * c];
    for n_i in 0..n {
        let acc = &mut out[n_i * c..(n_i + 1) * c];
        for h_i in 0..h {
            for w_i in 0..w {
                let src = idx4(&[n, h, w, c], n_i, h_i, w_i, 0);
                for ci in 0..c {
                    acc[ci] += data[src + ci];
                }
            }
        }
        for v in acc {
            *v *= scale;
        }
    }
    Tensor::new(vec![n, c], out)
}

/// Spreads each pooled gradient evenly over the spatial positions it
/// averaged: `d_input[n, h, w, c] = d_out[n, c] / (h * w)`.
pub fn global_avg_pool_backward(d_out: &Tensor, h: usize, w: usize) -> Result<Tensor> {
    let (n, c) = d_out.dims2("global_avg_pool d_out")?;
    if h == 0 || w == 0 {
        return Err(KernelError::arg(
            "global_avg_pool backward",
            "spatial dims must be positive",
        ));
    }
    let scale = 1.0 / (h * w) as f32;
    let dy = d_out.data();
    let mut dx = vec![0.0f32; n * h * w * c];
    for n_i in 0..n {
        let grad = &dy[n_i * c..(n_i + 1) * c];
        for h_i in 0..h {
            for w_i in 0..w {
                let dst = idx4(&[n, h, w, c], n_i, h_i, w_i, 0);
                for ci in 0..c {
                    dx[dst + ci] = grad[ci] * scale;
                }
            }
        }
    }
    Tensor::new(vec![n, h, w, c], dx)
}
