//! Separable-convolution image classifier: architecture planning, parameter
//! building, the static cost model, and the binary checkpoint format.
//!
//! The cost model and the parameter builder walk one shared [`plan`], so
//! reported mult-adds and parameter counts always describe the network that
//! actually runs.

pub mod checkpoint;
pub mod config;
pub mod cost;
pub mod error;
pub mod model;
pub mod plan;
pub mod reference;

pub use checkpoint::{checkpoint_from_bytes, checkpoint_to_bytes, load_checkpoint, save_checkpoint};
pub use config::{
    scaled_channels, Head, ModelConfig, Variant, TRANSFER_CLASSES, TRANSFER_DROPOUT,
    TRANSFER_HIDDEN, TRANSFER_L2,
};
pub use cost::{count_costs, CostReport, LayerCost, COMPARISON_POINTS};
pub use error::{CheckpointError, ModelError, Result};
pub use model::{argmax_classes, build_model, ForwardCache, Layer, Model, StepOutput};
pub use plan::{plan, ArchPlan, PlanStep};
pub use reference::ReferenceNet;
