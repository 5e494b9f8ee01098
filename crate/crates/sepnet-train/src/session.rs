//! The training loop: one pass per epoch, validation after every pass,
//! best-validation checkpointing, learning-rate decay on stagnation, and an
//! optional interactive "keep going?" continuation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sepnet_data::manifest::{DatasetManifest, Split};
use sepnet_data::{epoch_plan, load_batch, Batch};
use sepnet_kernels::{Rng, Tensor};
use sepnet_model::{load_checkpoint, save_checkpoint, Model};

use crate::config::TrainConfig;
use crate::error::{Result, TrainError};
use crate::eval::evaluate;
use crate::metrics::EpochRecord;
use crate::optimizer::{apply_gradients, zero_velocity};

/// Everything the loop mutates across epochs.
#[derive(Debug)]
pub struct TrainState {
    pub model: Model,
    velocity: Vec<(String, Tensor)>,
    /// Learning rate the next epoch will use.
    pub lr: f32,
    /// Highest validation accuracy seen so far; the checkpoint on disk
    /// corresponds to the epoch that set it. Starts below any real
    /// accuracy so the first epoch always stores.
    pub best_val_accuracy: f32,
    pub history: Vec<EpochRecord>,
    pub best_checkpoint: PathBuf,
    pub config: TrainConfig,
    rng: Rng,
}

impl TrainState {
    pub fn new(mut model: Model, config: TrainConfig, best_checkpoint: PathBuf) -> Result<Self> {
        config.validate()?;
        let velocity = zero_velocity(&mut model);
        let rng = Rng::new(config.seed);
        Ok(TrainState {
            model,
            velocity,
            lr: config.initial_lr,
            best_val_accuracy: f32::NEG_INFINITY,
            history: Vec::new(),
            best_checkpoint,
            config,
            rng,
        })
    }

    /// End-of-epoch protocol. A strict improvement stores the weights and
    /// raises the bar; anything else — ties included — decays the learning
    /// rate toward its floor. Returns whether the epoch improved.
    pub fn apply_validation(&mut self, val_accuracy: f32) -> Result<bool> {
        if val_accuracy > self.best_val_accuracy {
            let mut metadata = BTreeMap::new();
            metadata.insert("epoch".to_string(), (self.history.len() + 1).to_string());
            metadata.insert("val_accuracy".to_string(), val_accuracy.to_string());
            save_checkpoint(&self.model, &metadata, &self.best_checkpoint)?;
            self.best_val_accuracy = val_accuracy;
            Ok(true)
        } else {
            self.lr = (self.lr * self.config.lr_decay_factor).max(self.config.lr_floor);
            Ok(false)
        }
    }
}

/// One full pass over the training batches (with updates), then validation
/// in inference mode, then the checkpoint/decay policy.
pub fn run_epoch(
    state: &mut TrainState,
    train_batches: &[Batch],
    val_batches: &[Batch],
) -> Result<EpochRecord> {
    if train_batches.is_empty() || val_batches.is_empty() {
        return Err(TrainError::arg("an epoch needs non-empty train and val batches"));
    }
    let started = Instant::now();
    let lr_used = state.lr;
    let mut weighted_loss = 0.0f64;
    let mut correct = 0usize;
    let mut seen = 0usize;
    for batch in train_batches {
        let step = state
            .model
            .train_step_grads(&batch.images, &batch.labels, &mut state.rng)?;
        apply_gradients(
            &mut state.model,
            &step.grads,
            &mut state.velocity,
            lr_used,
            state.config.momentum,
        )?;
        weighted_loss += step.loss as f64 * batch.len() as f64;
        correct += step.correct;
        seen += batch.len();
    }
    let verdict = evaluate(&state.model, val_batches)?;
    state.apply_validation(verdict.accuracy)?;
    let record = EpochRecord {
        epoch: state.history.len() + 1,
        train_loss: (weighted_loss / seen as f64) as f32,
        train_accuracy: correct as f32 / seen as f32,
        val_loss: verdict.loss,
        val_accuracy: verdict.accuracy,
        learning_rate: lr_used,
        wall_seconds: started.elapsed().as_secs_f32().max(f32::MIN_POSITIVE),
    };
    state.history.push(record.clone());
    Ok(record)
}

/// Trains for `config.epochs` epochs (plus any interactively requested
/// blocks), then reloads the best checkpoint into the returned state.
///
/// `prompt` is consulted only when `config.interactive` is set: it returns
/// how many further epochs to run; `Some(0)` or `None` (end of input)
/// stops. Batches are re-decoded each epoch from the manifest; the shuffle
/// and dropout randomness both come from one seeded stream, so a given
/// (seed, data, config) triple always produces the same history and
/// checkpoint regardless of decoder thread count.
pub fn fit(
    model: Model,
    manifest: &DatasetManifest,
    root: &Path,
    config: &TrainConfig,
    out_dir: &Path,
    mut prompt: Option<&mut dyn FnMut() -> Option<usize>>,
) -> Result<TrainState> {
    config.validate()?;
    if config.interactive && prompt.is_none() {
        return Err(TrainError::arg("interactive training needs a continuation prompt"));
    }
    for split in Split::ALL {
        if manifest.split_indices(split).is_empty() {
            return Err(TrainError::arg(format!(
                "manifest has no {split} entries; assign splits first"
            )));
        }
    }
    std::fs::create_dir_all(out_dir).map_err(|e| TrainError::io(out_dir, e))?;
    let resolution = model.config.resolution;
    let mut state = TrainState::new(model, config.clone(), out_dir.join("best.ckpt"))?;

    // Validation keeps manifest order; order cannot change its outcome.
    let val_batches: Vec<Batch> = manifest
        .split_indices(Split::Val)
        .chunks(config.batch_size)
        .map(|chunk| load_batch(manifest, root, chunk, resolution))
        .collect::<std::result::Result<_, _>>()?;

    let mut block = config.epochs;
    loop {
        for _ in 0..block {
            let plan = epoch_plan(manifest, Split::Train, config.batch_size, &mut state.rng)?;
            let train_batches: Vec<Batch> = plan
                .iter()
                .map(|chunk| load_batch(manifest, root, chunk, resolution))
                .collect::<std::result::Result<_, _>>()?;
            run_epoch(&mut state, &train_batches, &val_batches)?;
        }
        match prompt.as_mut() {
            Some(ask) if config.interactive => match ask() {
                Some(0) | None => break,
                Some(more) => block = more,
            },
            _ => break,
        }
    }

    if !state.history.is_empty() {
        let (best, _) = load_checkpoint(&state.best_checkpoint)?;
        state.model = best;
    }
    Ok(state)
}
