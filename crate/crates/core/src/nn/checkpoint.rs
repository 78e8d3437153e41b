//! Single-file model container.
//!
//! Layout: the 8-byte magic `IRRCKPT\n`, a little-endian `u64` header length,
//! a JSON header (format version, seed, spec, scaler, optimizer scalars,
//! block names/shapes, blob length, free-form metadata), then the parameter
//! blob as little-endian `f64`: all parameters in block order, followed by
//! Adam first moments and second moments in the same order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AdamState, Model, ModelSpec, ParamBlock};
use crate::data::MinMaxScaler;
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"IRRCKPT\n";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub optimizer: AdamState,
    pub scaler: Option<MinMaxScaler>,
    pub meta: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    seed: u64,
    spec: ModelSpec,
    scaler: Option<MinMaxScaler>,
    optimizer: AdamState,
    blocks: Vec<ParamBlock>,
    /// Number of f64 values in the blob.
    blob_len: usize,
    meta: BTreeMap<String, String>,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

impl Checkpoint {
    pub fn new(model: Model, optimizer: AdamState) -> Self {
        Self { model, optimizer, scaler: None, meta: BTreeMap::new() }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let blocks = self.model.blocks();
        let n = self.model.num_params();
        let header = Header {
            version: FORMAT_VERSION,
            seed: self.model.spec().seed,
            spec: self.model.spec().clone(),
            scaler: self.scaler.clone(),
            optimizer: self.optimizer.clone(),
            blocks: blocks.to_vec(),
            blob_len: 3 * n,
            meta: self.meta.clone(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(16 + json.len() + 24 * n);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        let values = blocks
            .iter()
            .flat_map(|b| b.values.iter())
            .chain(self.optimizer.first_moment.iter().flatten())
            .chain(self.optimizer.second_moment.iter().flatten());
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 {
            return Err(corrupt("file truncated before header"));
        }
        if &bytes[..8] != MAGIC {
            return Err(corrupt("not a checkpoint file (bad magic)"));
        }
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let header_end = 16usize.checked_add(header_len).ok_or_else(|| corrupt("header length overflow"))?;
        if bytes.len() < header_end {
            return Err(corrupt(format!("file truncated inside header ({} of {header_end} bytes)", bytes.len())));
        }
        let header: serde_json::Value =
            serde_json::from_slice(&bytes[16..header_end]).map_err(|e| corrupt(format!("unreadable header: {e}")))?;
        let version = header.get("version").and_then(|v| v.as_u64());
        if version != Some(FORMAT_VERSION as u64) {
            return Err(corrupt(format!("unsupported checkpoint version {version:?}, expected {FORMAT_VERSION}")));
        }
        let header: Header = serde_json::from_value(header).map_err(|e| corrupt(format!("malformed header: {e}")))?;
        let blob = &bytes[header_end..];
        if blob.len() != header.blob_len * 8 {
            return Err(corrupt(format!("parameter blob has {} bytes, header declares {}", blob.len(), header.blob_len * 8)));
        }
        let mut values = blob.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let n: usize = header.blocks.iter().map(|b| b.shape.iter().product::<usize>()).sum();
        if header.blob_len != 3 * n {
            return Err(corrupt("blob length inconsistent with block shapes"));
        }
        let mut take = |len: usize| -> Vec<f64> { values.by_ref().take(len).collect() };
        let mut blocks = header.blocks;
        for b in &mut blocks {
            b.values = take(b.shape.iter().product());
        }
        let mut optimizer = header.optimizer;
        optimizer.first_moment = blocks.iter().map(|b| take(b.len())).collect();
        optimizer.second_moment = blocks.iter().map(|b| take(b.len())).collect();
        let model = Model::from_blocks(header.spec, blocks)?;
        Ok(Self { model, optimizer, scaler: header.scaler, meta: header.meta })
    }
}
