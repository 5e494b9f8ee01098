use crate::error::{Result, TrainError};

/// Hyperparameters of one training run. The L2 penalty is not here: it is a
/// property of the classifier head and rides along inside the model.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub initial_lr: f32,
    /// Multiplied into the learning rate after any epoch whose validation
    /// accuracy fails to set a new best.
    pub lr_decay_factor: f32,
    pub lr_floor: f32,
    pub momentum: f32,
    pub seed: u64,
    /// After the scheduled epochs, keep asking for more until 0 is entered.
    pub interactive: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 80,
            epochs: 15,
            initial_lr: 0.01,
            lr_decay_factor: 0.5,
            lr_floor: 1e-6,
            momentum: 0.9,
            seed: 0,
            interactive: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(TrainError::arg("batch size must be at least 1"));
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor < 1.0) {
            return Err(TrainError::arg(format!(
                "lr decay factor must be in (0, 1), got {}",
                self.lr_decay_factor
            )));
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return Err(TrainError::arg(format!(
                "initial learning rate must be positive, got {}",
                self.initial_lr
            )));
        }
        if !(self.lr_floor > 0.0 && self.lr_floor <= self.initial_lr) {
            return Err(TrainError::arg(format!(
                "lr floor must be in (0, initial lr], got {}",
                self.lr_floor
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(TrainError::arg(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        Ok(())
    }
}
