//! Synthetic two-class image generator for end-to-end tests.
//!
//! Each image is heavy per-pixel noise plus one filled disc whose brightness
//! and quadrant depend on the class: class 0 draws a mid-gray disc toward
//! the top-left, class 1 a bright disc toward the bottom-right. Both cues
//! are learnable by a small network within a few epochs. The noise floor is
//! strong enough that difference hashes of independent images stay far
//! apart — generated datasets must come out clean under the duplicate scan,
//! or the training command would refuse them.

use std::path::Path;

use image::{ImageBuffer, Rgb};
use sepnet_kernels::Rng;

use crate::error::{DataError, Result};

pub const SYNTH_CLASS_DIRS: [&str; 2] = ["class0", "class1"];

/// Writes `per_class` PNG images per class under `root/class0` and
/// `root/class1`. Deterministic in `seed` (identical bytes on every run).
pub fn generate_blob_dataset(
    root: &Path,
    resolution: usize,
    per_class: usize,
    seed: u64,
) -> Result<()> {
    if resolution < 9 {
        return Err(DataError::arg("synthetic images need resolution >= 9"));
    }
    if per_class == 0 {
        return Err(DataError::arg("per-class image count must be positive"));
    }
    let base = Rng::new(seed);
    for (class, dir_name) in SYNTH_CLASS_DIRS.iter().enumerate() {
        let dir = root.join(dir_name);
        std::fs::create_dir_all(&dir).map_err(|e| DataError::io(&dir, e))?;
        for index in 0..per_class {
            let mut rng = base.fork((class * per_class + index) as u64);
            let image = blob_image(resolution, class, &mut rng);
            let path = dir.join(format!("img{index:04}.png"));
            image.save(&path).map_err(|e| {
                DataError::arg(format!("cannot write {}: {e}", path.display()))
            })?;
        }
    }
    Ok(())
}

fn blob_image(resolution: usize, class: usize, rng: &mut Rng) -> ImageBuffer<Rgb<u8>, Vec<u8>> {
    let res = resolution as f32;
    // Disc center jitters across its class quadrant; radius and brightness
    // jitter mildly. Class 0: dimmer disc, upper left. Class 1: brighter,
    // lower right.
    let quadrant = if class == 0 { 0.3 } else { 0.7 };
    let cx = (quadrant + (rng.uniform() - 0.5) * 0.35) * res;
    let cy = (quadrant + (rng.uniform() - 0.5) * 0.35) * res;
    let radius = res * (0.18 + rng.uniform() * 0.08);
    let brightness = if class == 0 {
        110.0 + rng.uniform() * 25.0
    } else {
        215.0 + rng.uniform() * 25.0
    };

    // Explicit row-major pixel loop: the generator's byte-for-byte
    // determinism rests on the RNG being consumed in a pinned order.
    let mut data = Vec::with_capacity(resolution * resolution * 3);
    for y in 0..resolution {
        for x in 0..resolution {
            let noise = rng.uniform() * 55.0;
            let dx = x as f32 - cx;
            let dy = y as f32 - cy;
            let value = if dx * dx + dy * dy <= radius * radius {
                brightness + noise * 0.4
            } else {
                15.0 + noise
            };
            let v = value.clamp(0.0, 255.0) as u8;
            data.extend_from_slice(&[v, v, v]);
        }
    }
    ImageBuffer::from_raw(resolution as u32, resolution as u32, data)
        .expect("buffer sized to dimensions")
}
