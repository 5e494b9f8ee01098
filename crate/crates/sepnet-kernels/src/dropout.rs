use crate::error::{KernelError, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Inverted dropout: each element is kept with probability `1 - rate` and
/// scaled by `1 / (1 - rate)`, so the expected activation is unchanged and
/// inference needs no rescaling. Returns the keep mask for the backward
/// pass.
pub fn dropout_train(input: &Tensor, rate: f32, rng: &mut Rng) -> Result<(Tensor, Vec<bool>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(KernelError::arg(
            "dropout",
            format!("rate must be in [0, 1), got {rate}"),
        ));
    }
    let scale = 1.0 / (1.0 - rate);
    let mut mask = Vec::with_capacity(input.numel());
    let data = input
        .data()
        .iter()
        .map(|&v| {
            let keep = rng.uniform() >= rate;
            mask.push(keep);
            if keep {
                v * scale
            } else {
                0.0
            }
        })
        .collect();
    Ok((Tensor::new(input.shape().to_vec(), data)?, mask))
}

/// Routes gradients through the same kept elements with the same scale.
pub fn dropout_backward(d_out: &Tensor, mask: &[bool], rate: f32) -> Result<Tensor> {
    if d_out.numel() != mask.len() {
        return Err(KernelError::shape(
            "dropout backward",
            format!(
                "d_out has {} elements but mask has {}",
                d_out.numel(),
                mask.len()
            ),
        ));
    }
    let scale = 1.0 / (1.0 - rate);
    let data = d_out
        .data()
        .iter()
        .zip(mask)
        .map(|(&dy, &keep)| if keep { dy * scale } else { 0.0 })
        .collect();
    Tensor::new(d_out.shape().to_vec(), data)
}
