//! Dataset plumbing for the separable-convolution classifier: image
//! decoding and normalization, manifest files, stratified splitting,
//! duplicate detection with a cross-split leakage audit, and epoch batching.

pub mod batch;
pub mod dedup;
pub mod dhash;
pub mod error;
pub mod image_io;
pub mod manifest;
pub mod split;
pub mod synth;

pub use batch::{epoch_batches, epoch_plan, load_batch, Batch};
pub use dedup::{dedup_scan, DedupReport, Leak, DEFAULT_HAMMING_THRESHOLD};
pub use dhash::{dhash64, dhash64_file, hamming};
pub use error::{DataError, Result};
pub use image_io::{
    bilinear_resize, decode_image, denormalize, image_to_tensor, load_image, normalize, RawImage,
    PIXEL_SCALE,
};
pub use manifest::{
    build_manifest, parse_manifest, DatasetManifest, ManifestEntry, Split, MANIFEST_HEADER,
};
pub use split::{split_dataset, SplitSpec, DEFAULT_WEIGHTS};
pub use synth::{generate_blob_dataset, SYNTH_CLASS_DIRS};
