use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Body layout of the network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Depthwise 3x3 followed by pointwise 1x1 in every block.
    Separable,
    /// Every depthwise/pointwise pair replaced by one full 3x3 convolution.
    FullConv,
    /// Separable body with the five repeated mid-resolution blocks removed.
    Shallow,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Separable => "separable",
            Variant::FullConv => "full_conv",
            Variant::Shallow => "shallow",
        }
    }
}

/// Classifier attached after global average pooling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// Single fully connected layer straight to `classes` logits.
    Linear { classes: usize },
    /// Two-stage transfer head: a 128-unit ReLU layer whose weights carry
    /// an L2 penalty, dropout, then a binary classifier.
    Transfer,
}

/// Hidden width of the transfer head.
pub const TRANSFER_HIDDEN: usize = 128;
/// Dropout rate between the transfer head's two layers.
pub const TRANSFER_DROPOUT: f32 = 0.4;
/// L2 penalty coefficient on the transfer head's hidden weight matrix,
/// applied as `lambda * sum(w^2)` added to the loss.
pub const TRANSFER_L2: f32 = 0.015;
/// Output classes of the transfer head.
pub const TRANSFER_CLASSES: usize = 2;

/// Everything needed to reconstruct an architecture: variant, width
/// multiplier, input resolution, and head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    /// Width multiplier applied to every internal channel count.
    pub alpha: f32,
    /// Square input resolution in pixels.
    pub resolution: usize,
    /// Channel multiplier of the depthwise layers. Only 1 is supported.
    pub depth_multiplier: u32,
    pub head: Head,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(ModelError::InvalidConfig(format!(
                "alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.resolution < 32 {
            return Err(ModelError::InvalidConfig(format!(
                "resolution must be at least 32, got {}",
                self.resolution
            )));
        }
        if self.depth_multiplier != 1 {
            return Err(ModelError::InvalidConfig(format!(
                "depth multiplier {} is not supported; only 1",
                self.depth_multiplier
            )));
        }
        if let Head::Linear { classes } = self.head {
            if classes == 0 {
                return Err(ModelError::InvalidConfig(
                    "linear head needs at least one class".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn classes(&self) -> usize {
        match self.head {
            Head::Linear { classes } => classes,
            Head::Transfer => TRANSFER_CLASSES,
        }
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            variant: Variant::Separable,
            alpha: 1.0,
            resolution: 224,
            depth_multiplier: 1,
            head: Head::Linear { classes: 1000 },
        }
    }
}

/// Channel count after the width multiplier; never below one.
pub fn scaled_channels(base: usize, alpha: f32) -> usize {
    (((base as f64) * (alpha as f64)).round() as usize).max(1)
}
