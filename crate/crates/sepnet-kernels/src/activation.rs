use crate::error::{KernelError, Result};
use crate::tensor::Tensor;

/// Elementwise `max(0, x)`.
pub fn relu(input: &Tensor) -> Tensor {
    let data = input.data().iter().map(|&v| v.max(0.0)).collect();
    Tensor::new(input.shape().to_vec(), data).expect("relu shape")
}

/// Passes the gradient through where the forward input was strictly
/// positive; the gradient at exactly zero is zero.
pub fn relu_backward(input: &Tensor, d_out: &Tensor) -> Result<Tensor> {
    if input.shape() != d_out.shape() {
        return Err(KernelError::shape(
            "relu backward",
            format!(
                "input {:?} and d_out {:?} must match",
                input.shape(),
                d_out.shape()
            ),
        ));
    }
    let data = input
        .data()
        .iter()
        .zip(d_out.data())
        .map(|(&x, &dy)| if x > 0.0 { dy } else { 0.0 })
        .collect();
    Tensor::new(input.shape().to_vec(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_negatives_to_zero() {
        let x = Tensor::new(vec![1, 3], vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(relu(&x).data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn backward_gates_on_strictly_positive_input() {
        let x = Tensor::new(vec![1, 3], vec![-1.0, 0.0, 2.0]).unwrap();
        let dy = Tensor::new(vec![1, 3], vec![10.0, 10.0, 10.0]).unwrap();
        assert_eq!(relu_backward(&x, &dy).unwrap().data(), &[0.0, 0.0, 10.0]);
    }
}
