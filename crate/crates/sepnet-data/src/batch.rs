//! Epoch batching: seeded shuffle, fixed-size chunks, partial tail kept.
//!
//! Dropping the final short batch would silently shrink small splits (an
//! 80-image validation set at batch 128 would vanish entirely), so every
//! entry appears in exactly one batch per epoch.

use std::path::Path;

use rayon::prelude::*;
use sepnet_kernels::{Rng, Tensor};

use crate::error::{DataError, Result};
use crate::image_io::load_image;
use crate::manifest::{DatasetManifest, Split};

/// One training batch: images stacked `[n, res, res, 3]`, pixels in
/// `[-1, 1]`, one label per image.
#[derive(Clone, Debug)]
pub struct Batch {
    pub images: Tensor,
    pub labels: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// The shuffled batch layout for one epoch: manifest indices grouped into
/// chunks of `batch_size` (last chunk possibly shorter). Splitting the plan
/// from the loading keeps the order purely a function of the RNG, no matter
/// how decoding is parallelized later.
pub fn epoch_plan(
    manifest: &DatasetManifest,
    split: Split,
    batch_size: usize,
    rng: &mut Rng,
) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(DataError::arg("batch size must be positive"));
    }
    let mut indices = manifest.split_indices(split);
    if indices.is_empty() {
        return Err(DataError::arg(format!("split {split} has no entries")));
    }
    rng.shuffle(&mut indices);
    Ok(indices.chunks(batch_size).map(<[usize]>::to_vec).collect())
}

/// Decodes one planned batch. Images are decoded in parallel but assembled
/// in plan order, so the tensor is bit-identical for any worker count.
pub fn load_batch(
    manifest: &DatasetManifest,
    root: &Path,
    plan: &[usize],
    resolution: usize,
) -> Result<Batch> {
    let rows: Result<Vec<Tensor>> = plan
        .par_iter()
        .map(|&index| load_image(&root.join(&manifest.entries[index].path), resolution))
        .collect();
    let rows = rows?;
    let mut data = Vec::with_capacity(plan.len() * resolution * resolution * 3);
    for row in &rows {
        data.extend_from_slice(row.data());
    }
    let images = Tensor::new(vec![plan.len(), resolution, resolution, 3], data)?;
    let labels = plan
        .iter()
        .map(|&index| manifest.entries[index].label as usize)
        .collect();
    Ok(Batch { images, labels })
}

/// Convenience: plans and loads a whole epoch eagerly. Training code that
/// wants to overlap decoding with compute can drive `epoch_plan` +
/// `load_batch` itself.
pub fn epoch_batches(
    manifest: &DatasetManifest,
    root: &Path,
    split: Split,
    batch_size: usize,
    resolution: usize,
    rng: &mut Rng,
) -> Result<Vec<Batch>> {
    epoch_plan(manifest, split, batch_size, rng)?
        .iter()
        .map(|chunk| load_batch(manifest, root, chunk, resolution))
        .collect()
}
