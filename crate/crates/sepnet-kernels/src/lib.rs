//! Hand-written neural-network kernels on plain `f32` tensors.
//!
//! Every layer ships a forward pass and an explicit backward pass; there is
//! no autodiff. All kernels are deterministic: parallel loops only split
//! across independent output elements and every reduction runs in a fixed
//! order, so results are bitwise identical regardless of thread count.

pub mod activation;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod error;
pub mod gradcheck;
pub mod matmul;
pub mod norm;
pub mod pool;
pub mod reference;
pub mod rng;
pub mod softmax;
pub mod tensor;

pub use activation::{relu, relu_backward};
pub use conv::{conv2d, conv2d_backward, depthwise_conv2d, depthwise_conv2d_backward, Padding};
pub use dense::{dense, dense_backward};
pub use dropout::{dropout_backward, dropout_train};
pub use error::{KernelError, Result};
pub use norm::{batchnorm_backward, batchnorm_infer, batchnorm_train, BnCache, BN_EPS, BN_MOMENTUM};
pub use pool::{global_avg_pool, global_avg_pool_backward};
pub use rng::Rng;
pub use softmax::{softmax, softmax_cross_entropy};
pub use tensor::{LayerGrads, Tensor};
