//! Binary checkpoint container.
//!
//! Layout: the 8-byte magic, a little-endian `u32` format version, a `u64`
//! header length, the JSON header, then every tensor's values as
//! little-endian `f64` in header order.

use std::fs;
use std::path::Path;

use aft_core::model::ModelConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_at, CliError, CliResult};
use crate::models::{ModelKind, Trainable};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"AFTCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub kind: ModelKind,
    pub config: ModelConfig,
    /// Hex SHA-256 of the config's canonical JSON.
    pub config_hash: String,
    /// Epoch whose parameters were kept; 0 is the initialisation.
    pub epoch: usize,
    pub tensors: Vec<TensorEntry>,
}

pub fn config_hash(config: &ModelConfig) -> String {
    let json = serde_json::to_vec(config).expect("config serialises");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn encode(model: &Trainable, epoch: usize) -> Vec<u8> {
    let header = CheckpointHeader {
        kind: model.kind,
        config: model.config().clone(),
        config_hash: config_hash(model.config()),
        epoch,
        tensors: model
            .store
            .iter()
            .map(|(name, t)| TensorEntry {
                name: name.into(),
                shape: t.shape().to_vec(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).expect("header serialises");
    let mut out = Vec::with_capacity(20 + json.len() + 8 * model.store.numel());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, t) in model.store.iter() {
        for x in t.data() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

/// Rebuilds the model from its config and checks that the stored tensors
/// match the freshly built layout name for name and shape for shape.
pub fn decode(bytes: &[u8]) -> CliResult<(Trainable, CheckpointHeader)> {
    let bad = |m: String| CliError::Data(format!("checkpoint: {m}"));
    if bytes.len() < 20 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(bad("not a checkpoint file".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let header_len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
    let body = &bytes[20..];
    if body.len() < header_len {
        return Err(bad("truncated header".into()));
    }
    let header: CheckpointHeader =
        serde_json::from_slice(&body[..header_len]).map_err(|e| bad(format!("bad header: {e}")))?;
    if config_hash(&header.config) != header.config_hash {
        return Err(bad("config hash does not match the stored config".into()));
    }
    let mut model = Trainable::init(header.kind, &header.config, 0)?;
    let expected: Vec<TensorEntry> = model
        .store
        .iter()
        .map(|(name, t)| TensorEntry {
            name: name.into(),
            shape: t.shape().to_vec(),
        })
        .collect();
    if expected != header.tensors {
        return Err(bad("tensor table does not match the model the config describes".into()));
    }
    let mut data = &body[header_len..];
    if data.len() != 8 * model.store.numel() {
        return Err(bad(format!("{} data bytes for {} values", data.len(), model.store.numel())));
    }
    let ids: Vec<_> = model.store.ids().collect();
    for id in ids {
        let n = model.store.get(id).len();
        let (chunk, rest) = data.split_at(8 * n);
        data = rest;
        let values: Vec<f64> = chunk
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        if values.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Numeric(format!("checkpoint tensor {} holds non-finite values", model.store.name(id))));
        }
        model.store.set_data(id, &values)?;
    }
    Ok((model, header))
}

pub fn save(path: &Path, model: &Trainable, epoch: usize) -> CliResult<()> {
    fs::write(path, encode(model, epoch)).map_err(io_at(path))
}

pub fn load(path: &Path) -> CliResult<(Trainable, CheckpointHeader)> {
    let bytes = fs::read(path).map_err(io_at(path))?;
    decode(&bytes).map_err(|e| match e {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}
