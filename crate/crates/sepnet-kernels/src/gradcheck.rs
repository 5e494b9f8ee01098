//! Central-difference gradient checking.
//!
//! Every backward kernel in this crate is validated against numerical
//! differentiation of its forward pass. Comparisons use a relative error
//! with an absolute floor: coordinates where both gradients are smaller
//! than the floor are treated as matching zeros, since finite differences
//! in f32 cannot resolve them.

use crate::tensor::Tensor;

/// Step size for central differences.
pub const FD_EPS: f32 = 1e-3;
/// Maximum allowed relative error between analytic and numeric gradients.
pub const FD_TOL: f32 = 1e-2;
/// Magnitudes below this are indistinguishable from finite-difference noise.
pub const FD_FLOOR: f32 = 1e-3;

/// Numerical gradient of `f` at `x` for the given flat coordinates, using
/// central differences `(f(x + eps) - f(x - eps)) / (2 eps)` with a step
/// scaled up for large coordinates.
pub fn numeric_grad_at<F>(x: &Tensor, mut f: F, eps: f32, coords: &[usize]) -> Vec<f32>
where
    F: FnMut(&Tensor) -> f64,
{
    let mut probe = x.clone();
    let mut out = Vec::with_capacity(coords.len());
    for &c in coords {
        let orig = probe.data()[c];
        let step = eps * orig.abs().max(1.0);
        probe.data_mut()[c] = orig + step;
        let hi = f(&probe);
        probe.data_mut()[c] = orig - step;
        let lo = f(&probe);
        probe.data_mut()[c] = orig;
        out.push(((hi - lo) / (2.0 * step as f64)) as f32);
    }
    out
}

/// Full numerical gradient of `f` at `x`.
pub fn numeric_grad<F>(x: &Tensor, f: F, eps: f32) -> Tensor
where
    F: FnMut(&Tensor) -> f64,
{
    let coords: Vec<usize> = (0..x.numel()).collect();
    let data = numeric_grad_at(x, f, eps, &coords);
    Tensor::new(x.shape().to_vec(), data).expect("numeric grad shape")
}

/// Largest relative error across coordinates. Pairs where both magnitudes
/// fall below `floor` contribute zero.
pub fn max_rel_err(analytic: &[f32], numeric: &[f32], floor: f32) -> f32 {
    assert_eq!(analytic.len(), numeric.len());
    let mut worst = 0.0f32;
    for (&a, &n) in analytic.iter().zip(numeric) {
        let scale = a.abs().max(n.abs());
        if scale < floor {
            continue;
        }
        worst = worst.max((a - n).abs() / scale);
    }
    worst
}

/// Checks `|a - n| <= atol + tol * max(|a|, |n|)` for every coordinate.
///
/// The absolute term covers finite-difference noise: differentiating an f32
/// forward pass leaves each numeric entry with absolute error around
/// `loss quantization / (2 * eps)`, independent of the gradient's size.
/// Returns the worst offender on failure.
pub fn grads_match(
    analytic: &[f32],
    numeric: &[f32],
    tol: f32,
    atol: f32,
) -> std::result::Result<(), String> {
    assert_eq!(analytic.len(), numeric.len());
    let mut worst: Option<(usize, f32)> = None;
    for (i, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        let excess = (a - n).abs() - (atol + tol * a.abs().max(n.abs()));
        if excess > 0.0 && worst.map_or(true, |(_, w)| excess > w) {
            worst = Some((i, excess));
        }
    }
    match worst {
        None => Ok(()),
        Some((i, _)) => Err(format!(
            "gradient mismatch at [{i}]: analytic {} vs numeric {} (tol {tol}, atol {atol})",
            analytic[i], numeric[i]
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_gradient_of_quadratic() {
        let x = Tensor::new(vec![1, 3], vec![0.5, -1.5, 2.0]).unwrap();
        let g = numeric_grad(
            &x,
            |t| t.data().iter().map(|&v| (v as f64) * (v as f64)).sum(),
            FD_EPS,
        );
        for (num, &xv) in g.data().iter().zip(x.data()) {
            assert!((num - 2.0 * xv).abs() < 1e-3, "{num} vs {}", 2.0 * xv);
        }
    }

    #[test]
    fn rel_err_ignores_subfloor_noise() {
        let a = [1.0, 0.0001];
        let n = [1.0, -0.0002];
        assert_eq!(max_rel_err(&a, &n, FD_FLOOR), 0.0);
        let a = [1.0, 0.5];
        let n = [1.0, 0.4];
        assert!((max_rel_err(&a, &n, FD_FLOOR) - 0.2).abs() < 1e-6);
    }

    #[test]
    fn grads_match_allows_absolute_noise_but_not_sign_flips() {
        // Small absolute difference on a small entry: inside the allowance.
        assert!(grads_match(&[1.0, 0.05], &[1.0, 0.0513], FD_TOL, 2e-3).is_ok());
        // Same magnitude with flipped sign: rejected even though both are
        // small, because the difference is twice the magnitude.
        assert!(grads_match(&[1.0, 0.05], &[1.0, -0.05], FD_TOL, 2e-3).is_err());
        assert!(grads_match(&[1.0, 0.5], &[1.0, 0.4], FD_TOL, 2e-3).is_err());
    }
}
