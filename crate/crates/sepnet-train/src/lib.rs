//! Optimization loop for the separable-convolution classifier: SGD with
//! momentum, per-epoch validation, best-weights checkpointing, learning-rate
//! decay when validation stalls, and a deterministic metrics history.

pub mod config;
pub mod error;
pub mod eval;
pub mod metrics;
pub mod optimizer;
pub mod session;

pub use config::TrainConfig;
pub use error::{Result, TrainError};
pub use eval::{evaluate, predict, Evaluation};
pub use metrics::{
    load_metrics, parse_metrics, render_metrics, save_metrics, EpochRecord, MetricsRow,
    METRICS_HEADER,
};
pub use optimizer::{apply_gradients, sgd_momentum_step, zero_velocity};
pub use session::{fit, run_epoch, TrainState};
