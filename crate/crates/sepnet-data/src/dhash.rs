//! 64-bit difference hash for near-duplicate detection.
//!
//! The image is reduced to a 9-wide, 8-tall grayscale thumbnail; each of the
//! 64 bits records whether a pixel is strictly brighter than its right
//! neighbor. Visually similar images agree on most horizontal gradients, so
//! a small Hamming distance between hashes flags a near-duplicate pair.

use std::path::Path;

use crate::error::Result;
use crate::image_io::{bilinear_resize, decode_image, RawImage};

pub const DHASH_WIDTH: usize = 9;
pub const DHASH_HEIGHT: usize = 8;

pub fn dhash64(image: &RawImage) -> u64 {
    let luma = image.to_luma();
    let small = bilinear_resize(
        &luma,
        image.width,
        image.height,
        1,
        DHASH_WIDTH,
        DHASH_HEIGHT,
    );
    let mut hash = 0u64;
    for row in 0..DHASH_HEIGHT {
        for col in 0..DHASH_WIDTH - 1 {
            if small[row * DHASH_WIDTH + col] > small[row * DHASH_WIDTH + col + 1] {
                hash |= 1 << (row * (DHASH_WIDTH - 1) + col);
            }
        }
    }
    hash
}

pub fn dhash64_file(path: &Path) -> Result<u64> {
    Ok(dhash64(&decode_image(path)?))
}

pub fn hamming(a: u64, b: u64) -> u32 {
    (a ^ b).count_ones()
}
