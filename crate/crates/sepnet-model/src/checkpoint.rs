//! Binary checkpoint format.
//!
//! Layout: 4 magic bytes `SCFG`, a little-endian `u32` format version, a
//! little-endian `u64` header length, a JSON header, then the raw
//! little-endian `f32` tensor payload. The header carries the model config,
//! free-form string metadata, and a tensor table of `{name, shape, offset}`
//! where offsets index into the payload. Serialization is canonical
//! (ordered struct fields, sorted metadata keys, shortest-round-trip
//! floats), so save -> load -> save reproduces the file byte for byte.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::error::{CheckpointError, Result};
use crate::model::{build_model, Model};

const MAGIC: &[u8; 4] = b"SCFG";
const VERSION: u32 = 1;
const PREAMBLE_LEN: usize = 4 + 4 + 8;

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    metadata: BTreeMap<String, String>,
    tensors: Vec<TensorEntry>,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: u64,
}

pub fn checkpoint_to_bytes(model: &Model, metadata: &BTreeMap<String, String>) -> Vec<u8> {
    let state = model.state();
    let mut tensors = Vec::with_capacity(state.len());
    let mut offset = 0u64;
    for (name, tensor) in &state {
        tensors.push(TensorEntry {
            name: name.clone(),
            shape: tensor.shape().to_vec(),
            offset,
        });
        offset += (tensor.numel() * 4) as u64;
    }
    let header = Header {
        config: model.config.clone(),
        metadata: metadata.clone(),
        tensors,
    };
    let header_bytes = serde_json::to_vec(&header).expect("header serialization");

    let mut out = Vec::with_capacity(PREAMBLE_LEN + header_bytes.len() + offset as usize);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header_bytes.len() as u64).to_le_bytes());
    out.extend_from_slice(&header_bytes);
    for (_, tensor) in &state {
        for v in tensor.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<(Model, BTreeMap<String, String>)> {
    if bytes.len() < PREAMBLE_LEN {
        return Err(CheckpointError::ShortRead {
            needed: PREAMBLE_LEN,
            got: bytes.len(),
        }
        .into());
    }
    if &bytes[0..4] != MAGIC {
        return Err(CheckpointError::BadMagic.into());
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(version).into());
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let header_end = (header_len as usize)
        .checked_add(PREAMBLE_LEN)
        .filter(|&end| end <= bytes.len())
        .ok_or(CheckpointError::ShortRead {
            needed: header_len.min(u64::MAX - PREAMBLE_LEN as u64) as usize + PREAMBLE_LEN,
            got: bytes.len(),
        })?;
    let header: Header = serde_json::from_slice(&bytes[PREAMBLE_LEN..header_end])
        .map_err(|e| CheckpointError::MalformedHeader(e.to_string()))?;
    header
        .config
        .validate()
        .map_err(|e| CheckpointError::MalformedHeader(e.to_string()))?;

    // The tensor table must describe exactly the architecture the config
    // builds: same tensors, same order, same shapes, contiguous offsets.
    let mut model = build_model(&header.config, 0)?;
    {
        let expected = model.state();
        if expected.len() != header.tensors.len() {
            return Err(CheckpointError::TableMismatch(format!(
                "expected {} tensors, table has {}",
                expected.len(),
                header.tensors.len()
            ))
            .into());
        }
        let mut offset = 0u64;
        for ((name, tensor), entry) in expected.iter().zip(&header.tensors) {
            if *name != entry.name {
                return Err(CheckpointError::TableMismatch(format!(
                    "expected tensor {name}, table has {}",
                    entry.name
                ))
                .into());
            }
            if tensor.shape() != entry.shape.as_slice() {
                return Err(CheckpointError::TableMismatch(format!(
                    "{name}: expected shape {:?}, table has {:?}",
                    tensor.shape(),
                    entry.shape
                ))
                .into());
            }
            if entry.offset != offset {
                return Err(CheckpointError::TableMismatch(format!(
                    "{name}: expected offset {offset}, table has {}",
                    entry.offset
                ))
                .into());
            }
            offset += (tensor.numel() * 4) as u64;
        }
        let needed = header_end + offset as usize;
        if bytes.len() < needed {
            return Err(CheckpointError::ShortRead {
                needed,
                got: bytes.len(),
            }
            .into());
        }
    }

    let payload = &bytes[header_end..];
    let mut cursor = 0usize;
    for (_, tensor) in model.state_mut() {
        for v in tensor.data_mut() {
            *v = f32::from_le_bytes(payload[cursor..cursor + 4].try_into().unwrap());
            cursor += 4;
        }
    }
    Ok((model, header.metadata))
}

pub fn save_checkpoint(
    model: &Model,
    metadata: &BTreeMap<String, String>,
    path: impl AsRef<Path>,
) -> Result<()> {
    std::fs::write(path, checkpoint_to_bytes(model, metadata)).map_err(CheckpointError::Io)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(Model, BTreeMap<String, String>)> {
    let bytes = std::fs::read(path).map_err(CheckpointError::Io)?;
    checkpoint_from_bytes(&bytes)
}
