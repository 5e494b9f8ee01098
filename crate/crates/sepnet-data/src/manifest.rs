//! Dataset manifests: one record per image with class label, split
//! assignment and both duplicate-detection hashes.
//!
//! The on-disk form is a fixed-dialect CSV — header
//! `path,label,split,content_hash,phash`, five comma-separated fields, no
//! quoting, UTF-8, LF line endings. The parser is strict and total: any
//! deviation is a `Manifest` error naming the offending line, never a panic,
//! since manifest files travel between machines and users.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::dhash::dhash64;
use crate::error::{DataError, Result};
use crate::image_io::decode_image_bytes;

pub const MANIFEST_HEADER: &str = "path,label,split,content_hash,phash";

/// Extensions recognized when scanning a dataset directory.
const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(text: &str) -> Option<Split> {
        match text {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Path relative to the dataset root, `/`-separated.
    pub path: String,
    /// Class index, 0 or 1.
    pub label: u8,
    /// `None` until a split has been assigned (serialized as `none`).
    pub split: Option<Split>,
    /// Lowercase hex SHA-256 of the file bytes.
    pub content_hash: String,
    /// 64-bit difference hash of the decoded image.
    pub phash: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Wraps entries, enforcing path uniqueness and field validity.
    pub fn new(entries: Vec<ManifestEntry>) -> Result<DatasetManifest> {
        let mut seen = BTreeSet::new();
        for entry in &entries {
            validate_entry(entry)?;
            if !seen.insert(entry.path.as_str()) {
                return Err(DataError::arg(format!("duplicate path {}", entry.path)));
            }
        }
        Ok(DatasetManifest { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Indices of the entries assigned to `split`.
    pub fn split_indices(&self, split: Split) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.split == Some(split))
            .map(|(i, _)| i)
            .collect()
    }

    /// Per-class entry counts for `split` as `[class 0, class 1]`.
    pub fn class_counts(&self, split: Split) -> [usize; 2] {
        let mut counts = [0usize; 2];
        for entry in &self.entries {
            if entry.split == Some(split) {
                counts[entry.label as usize] += 1;
            }
        }
        counts
    }

    pub fn render(&self) -> String {
        let mut out = String::with_capacity(64 + self.entries.len() * 96);
        out.push_str(MANIFEST_HEADER);
        out.push('\n');
        for entry in &self.entries {
            let split = entry.split.map_or("none", Split::as_str);
            out.push_str(&format!(
                "{},{},{},{},{:016x}\n",
                entry.path, entry.label, split, entry.content_hash, entry.phash
            ));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| DataError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<DatasetManifest> {
        let bytes = std::fs::read(path).map_err(|e| DataError::io(path, e))?;
        parse_manifest(&bytes)
    }
}

fn validate_entry(entry: &ManifestEntry) -> Result<()> {
    if entry.path.is_empty() {
        return Err(DataError::arg("empty path in manifest entry"));
    }
    if entry.path.contains(',') || entry.path.contains(['\n', '\r']) || entry.path.contains('\0') {
        return Err(DataError::arg(format!(
            "path {:?} contains characters the manifest format cannot carry",
            entry.path
        )));
    }
    if entry.label > 1 {
        return Err(DataError::arg(format!(
            "label {} out of range for a two-class manifest",
            entry.label
        )));
    }
    if entry.content_hash.len() != 64
        || !entry.content_hash.bytes().all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase())
    {
        return Err(DataError::arg(format!(
            "content hash for {} is not 64 lowercase hex digits",
            entry.path
        )));
    }
    Ok(())
}

/// Parses manifest bytes. Total over arbitrary input: every malformed file
/// yields an error with a 1-based line number.
pub fn parse_manifest(bytes: &[u8]) -> Result<DatasetManifest> {
    let text = std::str::from_utf8(bytes).map_err(|e| DataError::Manifest {
        line: 0,
        message: format!("not UTF-8: {e}"),
    })?;
    let total_lines = text.split('\n').count();
    let mut lines = text.split('\n').enumerate();
    match lines.next() {
        Some((_, header)) if header == MANIFEST_HEADER => {}
        Some((_, header)) => {
            return Err(DataError::Manifest {
                line: 1,
                message: format!("expected header {MANIFEST_HEADER:?}, found {header:?}"),
            })
        }
        None => {
            return Err(DataError::Manifest {
                line: 1,
                message: "empty manifest".into(),
            })
        }
    }
    let mut entries = Vec::new();
    for (index, line) in lines {
        let number = index + 1;
        if line.is_empty() {
            // Only legal as the file's trailing newline.
            if number == total_lines {
                break;
            }
            return Err(DataError::Manifest {
                line: number,
                message: "empty line".into(),
            });
        }
        if line.contains('\r') {
            return Err(DataError::Manifest {
                line: number,
                message: "carriage return: manifests use LF line endings".into(),
            });
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(DataError::Manifest {
                line: number,
                message: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let label: u8 = fields[1].parse().map_err(|_| DataError::Manifest {
            line: number,
            message: format!("label {:?} is not 0 or 1", fields[1]),
        })?;
        let split = match fields[2] {
            "none" => None,
            other => Some(Split::parse(other).ok_or_else(|| DataError::Manifest {
                line: number,
                message: format!("split {other:?} is not train, val, test or none"),
            })?),
        };
        let phash_text = fields[4];
        if phash_text.len() != 16 {
            return Err(DataError::Manifest {
                line: number,
                message: format!("phash {phash_text:?} is not 16 hex digits"),
            });
        }
        let phash = u64::from_str_radix(phash_text, 16).map_err(|_| DataError::Manifest {
            line: number,
            message: format!("phash {phash_text:?} is not 16 hex digits"),
        })?;
        let entry = ManifestEntry {
            path: fields[0].to_string(),
            label,
            split,
            content_hash: fields[3].to_string(),
            phash,
        };
        validate_entry(&entry).map_err(|e| DataError::Manifest {
            line: number,
            message: e.to_string(),
        })?;
        entries.push(entry);
    }
    DatasetManifest::new(entries)
}

/// Builds a manifest from a dataset directory laid out as one subdirectory
/// per class (exactly two; labels follow lexicographic directory order).
/// Hashing and decoding run in parallel; the resulting entry order is
/// lexicographic by relative path regardless of worker scheduling.
pub fn build_manifest(root: &Path) -> Result<DatasetManifest> {
    let mut class_dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| DataError::io(root, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    class_dirs.sort();
    if class_dirs.len() != 2 {
        return Err(DataError::arg(format!(
            "{} needs exactly 2 class directories, found {}",
            root.display(),
            class_dirs.len()
        )));
    }

    let mut jobs: Vec<(String, u8, PathBuf)> = Vec::new();
    for (label, dir) in class_dirs.iter().enumerate() {
        let dir_name = dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| DataError::arg(format!("unreadable directory name under {}", root.display())))?
            .to_string();
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| DataError::io(dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && has_image_extension(p))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(DataError::arg(format!(
                "class directory {} contains no images",
                dir.display()
            )));
        }
        for file in files {
            let file_name = file
                .file_name()
                .and_then(|n| n.to_str())
                .ok_or_else(|| DataError::arg(format!("non-UTF-8 file name in {}", dir.display())))?;
            jobs.push((format!("{dir_name}/{file_name}"), label as u8, file));
        }
    }

    let entries: Result<Vec<ManifestEntry>> = jobs
        .par_iter()
        .map(|(rel, label, file)| {
            let bytes = std::fs::read(file).map_err(|e| DataError::io(file, e))?;
            let raw = decode_image_bytes(&bytes).map_err(|source| DataError::Decode {
                path: file.clone(),
                source,
            })?;
            let mut hasher = Sha256::new();
            hasher.update(&bytes);
            let digest = hasher.finalize();
            let content_hash = digest.iter().map(|b| format!("{b:02x}")).collect();
            Ok(ManifestEntry {
                path: rel.clone(),
                label: *label,
                split: None,
                content_hash,
                phash: dhash64(&raw),
            })
        })
        .collect();
    DatasetManifest::new(entries?)
}

fn has_image_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}
