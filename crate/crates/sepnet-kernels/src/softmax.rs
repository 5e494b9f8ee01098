use crate::error::{KernelError, Result};
use crate::tensor::Tensor;

/// Row-wise softmax over `[n, k]` logits, max-shifted for numerical
/// stability.
pub fn softmax(logits: &Tensor) -> Result<Tensor> {
    let (n, k) = logits.dims2("softmax logits")?;
    let mut out = vec![0.0f32; n * k];
    for (out_row, row) in out.chunks_exact_mut(k).zip(logits.data().chunks_exact(k)) {
        let max = row.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
        let mut sum = 0.0f32;
        for (o, &v) in out_row.iter_mut().zip(row) {
            let e = (v - max).exp();
            *o = e;
            sum += e;
        }
        for o in out_row.iter_mut() {
            *o /= sum;
        }
    }
    Tensor::new(vec![n, k], out)
}

/// Mean cross-entropy of softmax probabilities against integer labels,
/// fused with its gradient: `d_logits = (probs - onehot) / n`.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f32, Tensor)> {
    let (n, k) = logits.dims2("softmax logits")?;
    if labels.len() != n {
        return Err(KernelError::shape(
            "softmax_cross_entropy",
            format!("{n} logit rows but {} labels", labels.len()),
        ));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(KernelError::arg(
            "softmax_cross_entropy",
            format!("label {bad} out of range for {k} classes"),
        ));
    }
    let probs = softmax(logits)?;
    let mut loss = 0.0f64;
    let mut d_logits = probs.data().to_vec();
    let inv_n = 1.0 / n as f32;
    for (i, (&label, row)) in labels
        .iter()
        .zip(d_logits.chunks_exact_mut(k))
        .enumerate()
    {
        let p = probs.data()[i * k + label].max(f32::MIN_POSITIVE);
        loss -= (p as f64).ln();
        row[label] -= 1.0;
        for v in row.iter_mut() {
            *v *= inv_n;
        }
    }
    Ok((
        (loss / n as f64) as f32,
        Tensor::new(vec![n, k], d_logits)?,
    ))
}
