//! Decoding, resizing and normalization of input images.
//!
//! Resizing is deliberately implemented here instead of delegating to the
//! image crate: the interpolation rule is part of this pipeline's contract
//! (tests pin its arithmetic), and batch assembly must produce bit-identical
//! tensors regardless of which decoder backend or filter default ships with
//! a given crate version.

use std::path::Path;

use image::DynamicImage;
use sepnet_kernels::Tensor;

use crate::error::{DataError, Result};

/// Pixels are mapped from `[0, 255]` to `[-1, 1]` as `x / PIXEL_SCALE - 1`.
pub const PIXEL_SCALE: f32 = 127.5;

pub fn normalize(value: u8) -> f32 {
    value as f32 / PIXEL_SCALE - 1.0
}

pub fn denormalize(value: f32) -> f32 {
    (value + 1.0) * PIXEL_SCALE
}

/// An 8-bit RGB image flattened to `f32` in HWC order, the working form for
/// resizing and hashing.
#[derive(Clone, Debug)]
pub struct RawImage {
    pub width: usize,
    pub height: usize,
    /// `height * width * 3` values, each still on the 0..=255 scale.
    pub pixels: Vec<f32>,
}

impl RawImage {
    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<RawImage> {
        if width == 0 || height == 0 || bytes.len() != width * height * 3 {
            return Err(DataError::arg(format!(
                "{}x{} RGB image needs {} bytes, got {}",
                width,
                height,
                width * height * 3,
                bytes.len()
            )));
        }
        Ok(RawImage {
            width,
            height,
            pixels: bytes.iter().map(|&b| b as f32).collect(),
        })
    }

    /// Rec. 601 luma, used by the perceptual hash.
    pub fn to_luma(&self) -> Vec<f32> {
        self.pixels
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
            .collect()
    }
}

/// Decodes a PNG or JPEG file to RGB. Grayscale images are channel-replicated
/// and any alpha channel is dropped, both courtesy of the RGB conversion.
pub fn decode_image(path: &Path) -> Result<RawImage> {
    let bytes = std::fs::read(path).map_err(|e| DataError::io(path, e))?;
    decode_image_bytes(&bytes).map_err(|source| DataError::Decode {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn decode_image_bytes(bytes: &[u8]) -> std::result::Result<RawImage, image::ImageError> {
    let decoded: DynamicImage = image::load_from_memory(bytes)?;
    let rgb = decoded.to_rgb8();
    let (width, height) = rgb.dimensions();
    Ok(RawImage::from_rgb8(width as usize, height as usize, rgb.as_raw())
        .expect("decoder produced a consistent buffer"))
}

/// Bilinear resampling with pixel-center alignment: destination pixel `d`
/// samples the source at `(d + 0.5) * src/dst - 0.5`, clamped to the edge.
/// A same-size resize is exactly the identity.
pub fn bilinear_resize(
    src: &[f32],
    src_w: usize,
    src_h: usize,
    channels: usize,
    dst_w: usize,
    dst_h: usize,
) -> Vec<f32> {
    assert_eq!(src.len(), src_w * src_h * channels);
    assert!(dst_w > 0 && dst_h > 0);
    let x_scale = src_w as f32 / dst_w as f32;
    let y_scale = src_h as f32 / dst_h as f32;
    let mut out = vec![0.0f32; dst_w * dst_h * channels];
    for dy in 0..dst_h {
        let sy = ((dy as f32 + 0.5) * y_scale - 0.5).clamp(0.0, (src_h - 1) as f32);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(src_h - 1);
        let fy = sy - y0 as f32;
        for dx in 0..dst_w {
            let sx = ((dx as f32 + 0.5) * x_scale - 0.5).clamp(0.0, (src_w - 1) as f32);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(src_w - 1);
            let fx = sx - x0 as f32;
            for ch in 0..channels {
                let p00 = src[(y0 * src_w + x0) * channels + ch];
                let p01 = src[(y0 * src_w + x1) * channels + ch];
                let p10 = src[(y1 * src_w + x0) * channels + ch];
                let p11 = src[(y1 * src_w + x1) * channels + ch];
                let top = p00 + (p01 - p00) * fx;
                let bottom = p10 + (p11 - p10) * fx;
                out[(dy * dst_w + dx) * channels + ch] = top + (bottom - top) * fy;
            }
        }
    }
    out
}

/// Loads one image as a `[1, resolution, resolution, 3]` tensor with pixels
/// normalized to `[-1, 1]`. Aspect ratio is not preserved: non-square inputs
/// are stretched.
pub fn load_image(path: &Path, resolution: usize) -> Result<Tensor> {
    if resolution == 0 {
        return Err(DataError::arg("resolution must be positive"));
    }
    let raw = decode_image(path)?;
    Ok(image_to_tensor(&raw, resolution))
}

pub fn image_to_tensor(raw: &RawImage, resolution: usize) -> Tensor {
    let resized = bilinear_resize(&raw.pixels, raw.width, raw.height, 3, resolution, resolution);
    let data: Vec<f32> = resized.iter().map(|&v| v / PIXEL_SCALE - 1.0).collect();
    Tensor::new(vec![1, resolution, resolution, 3], data).expect("resize output shape")
}
