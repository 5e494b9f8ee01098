use crate::error::{KernelError, Result};
use crate::matmul::{matmul, matmul_a_bt, matmul_at_b};
use crate::tensor::{LayerGrads, Tensor};

/// Fully connected layer: `out[n, m] = input[n, k] * weights[k, m] + bias[m]`.
pub fn dense(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (n, k) = input.dims2("dense input")?;
    let (wk, m) = weights.dims2("dense weights")?;
    if wk != k {
        return Err(KernelError::shape(
            "dense",
            format!("input has {k} features but weights expect {wk}"),
        ));
    }
    if bias.shape() != [m] {
        return Err(KernelError::shape(
            "dense bias",
            format!("expected [{m}], got {:?}", bias.shape()),
        ));
    }
    let mut out = matmul(input.data(), weights.data(), n, k, m);
    let b = bias.data();
    for row in out.chunks_exact_mut(m) {
        for (o, &bv) in row.iter_mut().zip(b) {
            *o += bv;
        }
    }
    Tensor::new(vec![n, m], out)
}

/// Gradients of [`dense`] with respect to its input, weights ("weights"),
/// and bias ("bias").
pub fn dense_backward(input: &Tensor, weights: &Tensor, d_out: &Tensor) -> Result<LayerGrads> {
    let (n, k) = input.dims2("dense input")?;
    let (wk, m) = weights.dims2("dense weights")?;
    if wk != k {
        return Err(KernelError::shape(
            "dense backward",
            format!("input has {k} features but weights expect {wk}"),
        ));
    }
    let (dn, dm) = d_out.dims2("dense d_out")?;
    if (dn, dm) != (n, m) {
        return Err(KernelError::shape(
            "dense backward",
            format!("d_out shape {:?} does not match [{n}, {m}]", d_out.shape()),
        ));
    }
    let d_weights = matmul_at_b(input.data(), d_out.data(), n, k, m);
    let d_input = matmul_a_bt(d_out.data(), weights.data(), n, m, k);
    let mut d_bias = vec![0.0f32; m];
    for row in d_out.data().chunks_exact(m) {
        for (b, &v) in d_bias.iter_mut().zip(row) {
            *b += v;
        }
    }
    Ok(LayerGrads {
        d_input: Tensor::new(vec![n, k], d_input)?,
        d_params: vec![
            ("weights", Tensor::new(vec![k, m], d_weights)?),
            ("bias", Tensor::new(vec![m], d_bias)?),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_matches_hand_computation() {
        let x = Tensor::new(vec![1, 2], vec![1.0, 2.0]).unwrap();
        let w = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Tensor::new(vec![2], vec![0.5, -0.5]).unwrap();
        let out = dense(&x, &w, &b).unwrap();
        assert_eq!(out.data(), &[7.5, 9.5]);
    }

    #[test]
    fn rejects_feature_mismatch() {
        let x = Tensor::new(vec![1, 3], vec![1.0, 2.0, 3.0]).unwrap();
        let w = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Tensor::zeros(&[2]);
        assert!(dense(&x, &w, &b).is_err());
    }

    #[test]
    fn backward_bias_grad_sums_over_batch() {
        let x = Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let w = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let dy = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let grads = dense_backward(&x, &w, &dy).unwrap();
        assert_eq!(grads.param("bias").unwrap().data(), &[4.0, 6.0]);
        // With identity input, d_weights equals d_out row-by-row.
        assert_eq!(
            grads.param("weights").unwrap().data(),
            &[1.0, 2.0, 3.0, 4.0]
        );
    }
}
