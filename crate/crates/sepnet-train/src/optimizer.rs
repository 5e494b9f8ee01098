//! SGD with classical momentum:
//!
//! ```text
//! v <- momentum * v - lr * g
//! w <- w + v
//! ```

use sepnet_kernels::Tensor;
use sepnet_model::Model;

use crate::error::{Result, TrainError};

/// Updates one parameter tensor and its velocity in place.
pub fn sgd_momentum_step(
    param: &mut Tensor,
    grad: &Tensor,
    velocity: &mut Tensor,
    lr: f32,
    momentum: f32,
) -> Result<()> {
    if param.shape() != grad.shape() || param.shape() != velocity.shape() {
        return Err(TrainError::arg(format!(
            "optimizer shape mismatch: param {:?}, grad {:?}, velocity {:?}",
            param.shape(),
            grad.shape(),
            velocity.shape()
        )));
    }
    for ((w, &g), v) in param
        .data_mut()
        .iter_mut()
        .zip(grad.data())
        .zip(velocity.data_mut().iter_mut())
    {
        *v = momentum * *v - lr * g;
        *w += *v;
    }
    Ok(())
}

/// One zero-initialized velocity tensor per trainable parameter, in the
/// model's parameter order.
pub fn zero_velocity(model: &mut Model) -> Vec<(String, Tensor)> {
    model
        .params_mut()
        .into_iter()
        .map(|(name, param)| (name, Tensor::zeros(param.shape())))
        .collect()
}

/// Applies a full gradient set to the model. `grads` and `velocity` must
/// both be in the model's parameter order (as produced by a training step
/// and [`zero_velocity`] respectively).
pub fn apply_gradients(
    model: &mut Model,
    grads: &[(String, Tensor)],
    velocity: &mut [(String, Tensor)],
    lr: f32,
    momentum: f32,
) -> Result<()> {
    let params = model.params_mut();
    if params.len() != grads.len() || params.len() != velocity.len() {
        return Err(TrainError::arg(format!(
            "gradient set has {} tensors, model has {} parameters, velocity {}",
            grads.len(),
            params.len(),
            velocity.len()
        )));
    }
    for ((name, param), ((grad_name, grad), (vel_name, vel))) in
        params.into_iter().zip(grads.iter().zip(velocity.iter_mut()))
    {
        if name != *grad_name || name != *vel_name {
            return Err(TrainError::arg(format!(
                "gradient order mismatch: param {name}, grad {grad_name}, velocity {vel_name}"
            )));
        }
        sgd_momentum_step(param, grad, vel, lr, momentum)?;
    }
    Ok(())
}
