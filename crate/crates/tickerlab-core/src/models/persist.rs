//! Model file container. Layout:
//!
//! ```text
//! b"TKLB"                        magic
//! u32 LE                         format version (currently 1)
//! u32 LE                         metadata length M
//! M bytes                        metadata JSON (spec, scaler, fingerprint,
//!                                loss history, tensor manifest)
//! u32 LE                         CRC-32 of the metadata bytes
//! per tensor, in manifest order:
//!   8 * len bytes                values as little-endian f64 bits
//!   u32 LE                       CRC-32 of those bytes
//! ```
//!
//! Weights survive a save/load round trip bit-identically; predictions after
//! reload equal predictions before saving exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EpochLoss, Fingerprint, ModelError, ModelSpec, ModelWeights, TrainedModel};
use crate::preprocess::ScalingParams;

const MAGIC: &[u8; 4] = b"TKLB";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct FileMeta {
    spec: ModelSpec,
    scaler: ScalingParams,
    fingerprint: Fingerprint,
    loss_history: Vec<EpochLoss>,
    best_epoch: usize,
    tensors: Vec<TensorEntry>,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

fn crc32(bytes: &[u8]) -> u32 {
    // CRC-32 (IEEE 802.3), bitwise form; model files are small enough that a
    // lookup table buys nothing.
    let mut crc = 0xFFFF_FFFFu32;
    for b in bytes {
        crc ^= *b as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xEDB8_8320 & mask);
        }
    }
    !crc
}

/// Write a trained model to `path`.
pub fn save(model: &TrainedModel, path: &Path) -> Result<(), ModelError> {
    let named = model.weights.named_tensors();
    let meta = FileMeta {
        spec: model.spec,
        scaler: model.scaler,
        fingerprint: model.fingerprint,
        loss_history: model.loss_history.clone(),
        best_epoch: model.best_epoch,
        tensors: named
            .iter()
            .map(|(name, tensor)| TensorEntry {
                name: name.clone(),
                shape: tensor.shape().to_vec(),
            })
            .collect(),
    };
    let meta_bytes = serde_json::to_vec_pretty(&meta)
        .map_err(|err| ModelError::CorruptFile(format!("metadata encoding failed: {err}")))?;

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(meta_bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(&meta_bytes);
    out.extend_from_slice(&crc32(&meta_bytes).to_le_bytes());
    for (_, tensor) in &named {
        let mut payload = Vec::with_capacity(tensor.len() * 8);
        for v in tensor.values() {
            payload.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        out.extend_from_slice(&payload);
        out.extend_from_slice(&crc32(&payload).to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        if self.at + n > self.bytes.len() {
            return Err(ModelError::CorruptFile(format!(
                "unexpected end of file at byte {}",
                self.bytes.len()
            )));
        }
        let slice = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(slice)
    }

    fn take_u32(&mut self) -> Result<u32, ModelError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Read a trained model from `path`.
pub fn load(path: &Path) -> Result<TrainedModel, ModelError> {
    let bytes = fs::read(path)?;
    let mut reader = Reader {
        bytes: &bytes,
        at: 0,
    };

    if reader.take(4)? != MAGIC {
        return Err(ModelError::CorruptFile(
            "missing TKLB magic bytes".to_string(),
        ));
    }
    let version = reader.take_u32()?;
    if version != FORMAT_VERSION {
        return Err(ModelError::UnsupportedVersion(version));
    }
    let meta_len = reader.take_u32()? as usize;
    let meta_bytes = reader.take(meta_len)?;
    let stored_crc = reader.take_u32()?;
    if crc32(meta_bytes) != stored_crc {
        return Err(ModelError::CorruptFile(
            "metadata checksum mismatch".to_string(),
        ));
    }
    let meta: FileMeta = serde_json::from_slice(meta_bytes)
        .map_err(|err| ModelError::CorruptFile(format!("metadata decoding failed: {err}")))?;
    meta.spec.validate()?;

    let mut weights = ModelWeights::zeros(&meta.spec);
    {
        let expected: Vec<(String, Vec<usize>)> = weights
            .named_tensors()
            .iter()
            .map(|(name, tensor)| (name.clone(), tensor.shape().to_vec()))
            .collect();
        let declared: Vec<(String, Vec<usize>)> = meta
            .tensors
            .iter()
            .map(|entry| (entry.name.clone(), entry.shape.clone()))
            .collect();
        if expected != declared {
            return Err(ModelError::CorruptFile(
                "tensor manifest does not match the spec".to_string(),
            ));
        }
    }
    for tensor in weights.tensors_mut() {
        let payload = reader.take(tensor.len() * 8)?;
        let stored_crc = reader.take_u32()?;
        if crc32(payload) != stored_crc {
            return Err(ModelError::CorruptFile(
                "weight checksum mismatch".to_string(),
            ));
        }
        for (value, chunk) in tensor.values_mut().iter_mut().zip(payload.chunks_exact(8)) {
            let mut raw = [0u8; 8];
            raw.copy_from_slice(chunk);
            *value = f64::from_bits(u64::from_le_bytes(raw));
        }
    }
    if reader.at != bytes.len() {
        return Err(ModelError::CorruptFile(format!(
            "{} trailing bytes",
            bytes.len() - reader.at
        )));
    }

    Ok(TrainedModel {
        spec: meta.spec,
        weights,
        scaler: meta.scaler,
        fingerprint: meta.fingerprint,
        loss_history: meta.loss_history,
        best_epoch: meta.best_epoch,
    })
}
