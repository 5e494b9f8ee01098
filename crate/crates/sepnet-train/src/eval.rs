use std::path::Path;

use sepnet_data::{load_image, Batch};
use sepnet_kernels::{softmax, softmax_cross_entropy};
use sepnet_model::{argmax_classes, Model};

use crate::error::{Result, TrainError};

/// Inference-mode verdict over a set of batches.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    /// Mean cross-entropy plus the model's L2 penalty — the same quantity
    /// the training loop reports, so train and val losses are comparable.
    pub loss: f32,
    /// trace(confusion) / total.
    pub accuracy: f32,
    /// `confusion[true_label][predicted]`.
    pub confusion: [[usize; 2]; 2],
}

/// Runs the model over `batches` with dropout off and batch-norm running
/// statistics (no parameter updates, no RNG consumption).
pub fn evaluate(model: &Model, batches: &[Batch]) -> Result<Evaluation> {
    if model.config.classes() != 2 {
        return Err(TrainError::arg(format!(
            "evaluation expects a binary classifier, head has {} classes",
            model.config.classes()
        )));
    }
    let mut weighted_loss = 0.0f64;
    let mut confusion = [[0usize; 2]; 2];
    let mut total = 0usize;
    for batch in batches {
        let logits = model.forward_infer(&batch.images)?;
        let (ce, _) = softmax_cross_entropy(&logits, &batch.labels)?;
        weighted_loss += ce as f64 * batch.len() as f64;
        for (&label, predicted) in batch.labels.iter().zip(argmax_classes(&logits)?) {
            if label > 1 {
                return Err(TrainError::arg(format!("label {label} out of range for binary head")));
            }
            confusion[label][predicted] += 1;
        }
        total += batch.len();
    }
    if total == 0 {
        return Err(TrainError::arg("evaluation needs at least one sample"));
    }
    let correct = confusion[0][0] + confusion[1][1];
    Ok(Evaluation {
        loss: (weighted_loss / total as f64) as f32 + model.l2_penalty(),
        accuracy: correct as f32 / total as f32,
        confusion,
    })
}

/// Classifies one image file: softmax probabilities and the argmax class,
/// ties resolved to class 0.
pub fn predict(model: &Model, image_path: &Path) -> Result<(usize, Vec<f32>)> {
    let image = load_image(image_path, model.config.resolution)?;
    let logits = model.forward_infer(&image)?;
    let probs = softmax(&logits)?;
    let class = argmax_classes(&logits)?[0];
    Ok((class, probs.data().to_vec()))
}
