//! Per-epoch training history and its on-disk CSV form.
//!
//! The file deliberately omits wall-clock time: everything written is a pure
//! function of (seed, data, config), so reruns produce byte-identical files.

use std::path::Path;

use crate::error::{Result, TrainError};

pub const METRICS_HEADER: &str = "epoch,train_loss,train_acc,val_loss,val_acc,lr";

/// One epoch as observed by the training loop.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    /// 1-based epoch index.
    pub epoch: usize,
    pub train_loss: f32,
    pub train_accuracy: f32,
    pub val_loss: f32,
    pub val_accuracy: f32,
    /// Learning rate the epoch's updates actually used (decay applies to
    /// the following epoch).
    pub learning_rate: f32,
    pub wall_seconds: f32,
}

/// One row of the metrics file: [`EpochRecord`] minus wall time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsRow {
    pub epoch: usize,
    pub train_loss: f32,
    pub train_accuracy: f32,
    pub val_loss: f32,
    pub val_accuracy: f32,
    pub learning_rate: f32,
}

impl From<&EpochRecord> for MetricsRow {
    fn from(r: &EpochRecord) -> Self {
        MetricsRow {
            epoch: r.epoch,
            train_loss: r.train_loss,
            train_accuracy: r.train_accuracy,
            val_loss: r.val_loss,
            val_accuracy: r.val_accuracy,
            learning_rate: r.learning_rate,
        }
    }
}

/// Renders history to the CSV form. Floats use Rust's shortest-roundtrip
/// formatting, so parsing the file recovers the exact stored values.
pub fn render_metrics(history: &[EpochRecord]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in history {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.epoch, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy, r.learning_rate
        ));
    }
    out
}

pub fn save_metrics(history: &[EpochRecord], path: &Path) -> Result<()> {
    std::fs::write(path, render_metrics(history)).map_err(|e| TrainError::io(path, e))
}

fn row_err(line: usize, message: impl Into<String>) -> TrainError {
    TrainError::Metrics {
        line,
        message: message.into(),
    }
}

fn parse_float(line: usize, field: &str, name: &str, lo: f32, hi: f32) -> Result<f32> {
    let value: f32 = field
        .parse()
        .map_err(|_| row_err(line, format!("{name} is not a number: {field:?}")))?;
    if !value.is_finite() {
        return Err(row_err(line, format!("{name} must be finite, got {field}")));
    }
    if !(lo..=hi).contains(&value) {
        return Err(row_err(
            line,
            format!("{name} must be in [{lo}, {hi}], got {field}"),
        ));
    }
    Ok(value)
}

/// Strict parser for the metrics format; accepts exactly what
/// [`render_metrics`] emits. Epochs must count 1, 2, 3, … and every value
/// must be finite and in range. All errors carry a 1-based line number.
pub fn parse_metrics(bytes: &[u8]) -> Result<Vec<MetricsRow>> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| row_err(0, "metrics file is not valid UTF-8"))?;
    if text.contains('\r') {
        return Err(row_err(0, "expected LF line endings, found a carriage return"));
    }
    let mut lines = text.split('\n');
    match lines.next() {
        Some(h) if h == METRICS_HEADER => {}
        other => {
            return Err(row_err(
                1,
                format!("expected header {METRICS_HEADER:?}, got {:?}", other.unwrap_or("")),
            ))
        }
    }
    let body: Vec<&str> = lines.collect();
    let mut rows = Vec::new();
    for (i, raw) in body.iter().enumerate() {
        let line = i + 2;
        if raw.is_empty() {
            // Only the trailing newline may produce an empty tail.
            if i + 1 == body.len() {
                break;
            }
            return Err(row_err(line, "empty line inside metrics file"));
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 6 {
            return Err(row_err(
                line,
                format!("expected 6 comma-separated fields, got {}", fields.len()),
            ));
        }
        let epoch: usize = fields[0]
            .parse()
            .map_err(|_| row_err(line, format!("epoch is not an integer: {:?}", fields[0])))?;
        if epoch != rows.len() + 1 {
            return Err(row_err(
                line,
                format!("epoch {epoch} out of order, expected {}", rows.len() + 1),
            ));
        }
        rows.push(MetricsRow {
            epoch,
            train_loss: parse_float(line, fields[1], "train_loss", 0.0, f32::MAX)?,
            train_accuracy: parse_float(line, fields[2], "train_acc", 0.0, 1.0)?,
            val_loss: parse_float(line, fields[3], "val_loss", 0.0, f32::MAX)?,
            val_accuracy: parse_float(line, fields[4], "val_acc", 0.0, 1.0)?,
            learning_rate: parse_float(line, fields[5], "lr", f32::MIN_POSITIVE, f32::MAX)?,
        });
    }
    Ok(rows)
}

pub fn load_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let bytes = std::fs::read(path).map_err(|e| TrainError::io(path, e))?;
    parse_metrics(&bytes)
}
