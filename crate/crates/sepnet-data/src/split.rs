//! Stratified train/val/test assignment.
//!
//! Splitting is per class: each class's entries are shuffled with a stream
//! forked off the seed and dealt out to train, val and test in order, so the
//! class balance of every split matches the requested proportions exactly
//! and a given (manifest, spec, seed) triple always produces the same
//! assignment.

use sepnet_kernels::Rng;

use crate::error::{DataError, Result};
use crate::manifest::{DatasetManifest, Split};

/// Default proportions, 1327 : 80 : 140 (≈ 88% / 5.3% / 9.3%).
pub const DEFAULT_WEIGHTS: (f64, f64, f64) = (1327.0, 80.0, 140.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SplitSpec {
    /// Proportions of each class, required to sum to 1. Every entry is
    /// assigned a split; per-class counts follow largest-remainder rounding.
    Fractions { train: f64, val: f64, test: f64 },
    /// Exact per-class counts. Entries beyond `train + val + test` per class
    /// are left unassigned.
    Counts {
        train: usize,
        val: usize,
        test: usize,
    },
}

impl Default for SplitSpec {
    fn default() -> Self {
        let (train, val, test) = DEFAULT_WEIGHTS;
        let total = train + val + test;
        SplitSpec::Fractions {
            train: train / total,
            val: val / total,
            test: test / total,
        }
    }
}

/// Returns a copy of `manifest` with every entry's split assignment
/// replaced according to `spec`. Stratified per class and deterministic
/// given `seed`; the entry order is preserved.
pub fn split_dataset(
    manifest: &DatasetManifest,
    spec: SplitSpec,
    seed: u64,
) -> Result<DatasetManifest> {
    if let SplitSpec::Fractions { train, val, test } = spec {
        if !(train > 0.0 && val >= 0.0 && test >= 0.0) {
            return Err(DataError::arg(
                "split fractions must be positive (train) and non-negative",
            ));
        }
        let sum = train + val + test;
        if (sum - 1.0).abs() > 1e-6 {
            return Err(DataError::arg(format!(
                "split fractions sum to {sum}, expected 1"
            )));
        }
    }

    let mut entries = manifest.entries.clone();
    for entry in entries.iter_mut() {
        entry.split = None;
    }

    let root = Rng::new(seed);
    for label in 0..=1u8 {
        let mut indices: Vec<usize> = entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.label == label)
            .map(|(i, _)| i)
            .collect();
        let n = indices.len();
        let mut rng = root.fork(label as u64);
        rng.shuffle(&mut indices);

        let (train_n, val_n, test_n) = match spec {
            SplitSpec::Fractions { train, val, test } => largest_remainder(n, [train, val, test]),
            SplitSpec::Counts { train, val, test } => {
                let need = train + val + test;
                if need > n {
                    return Err(DataError::arg(format!(
                        "class {label} has {n} images but the requested split needs {need}"
                    )));
                }
                (train, val, test)
            }
        };

        for (i, &index) in indices.iter().enumerate() {
            entries[index].split = if i < train_n {
                Some(Split::Train)
            } else if i < train_n + val_n {
                Some(Split::Val)
            } else if i < train_n + val_n + test_n {
                Some(Split::Test)
            } else {
                None
            };
        }
    }
    DatasetManifest::new(entries)
}

/// Apportions `n` items to three quotas by largest remainder: floor each
/// quota, then hand the leftover items to the largest fractional parts
/// (ties broken in train, val, test order).
fn largest_remainder(n: usize, fractions: [f64; 3]) -> (usize, usize, usize) {
    let quotas: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &slot in order.iter().take(n.saturating_sub(assigned)) {
        counts[slot] += 1;
    }
    (counts[0], counts[1], counts[2])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn largest_remainder_consumes_everything() {
        for n in [0usize, 1, 7, 80, 1507, 1547] {
            let (a, b, c) = largest_remainder(n, [1327.0 / 1547.0, 80.0 / 1547.0, 140.0 / 1547.0]);
            assert_eq!(a + b + c, n, "n = {n}");
        }
    }

    #[test]
    fn largest_remainder_is_exact_on_proportional_totals() {
        let (a, b, c) = largest_remainder(1547, [1327.0 / 1547.0, 80.0 / 1547.0, 140.0 / 1547.0]);
        assert_eq!((a, b, c), (1327, 80, 140));
    }

    #[test]
    fn ties_go_to_train_first() {
        // 0.5 / 0.25 / 0.25 of 2: quotas 1.0, 0.5, 0.5 — one leftover item,
        // val and test tie on remainder and val wins by order.
        let (a, b, c) = largest_remainder(2, [0.5, 0.25, 0.25]);
        assert_eq!((a, b, c), (1, 1, 0));
    }
}
