//! Checkpoint file format.
//!
//! Layout: magic `IMCL`, format version (u32 LE), header length (u32 LE),
//! UTF-8 text header, then every tensor as little-endian f32 in manifest
//! order. Save -> load -> save is byte-identical.

use super::model::{GinModel, ModelConfig};
use crate::chem::FeatureSet;
use std::io::Read;
use std::path::Path;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"IMCL";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("checkpoint format version {found} unsupported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("malformed checkpoint header: {0}")]
    Header(String),
    #[error("tensor payload truncated")]
    Truncated,
}

/// Serializes the model to checkpoint bytes.
pub fn to_bytes(model: &GinModel<f32>) -> Vec<u8> {
    let cfg = &model.config;
    let mut header = String::new();
    header.push_str(&format!("d = {}\n", cfg.d));
    header.push_str(&format!("d_z = {}\n", cfg.d_z));
    header.push_str(&format!("k = {}\n", cfg.k_layers));
    header.push_str(&format!("feature_set = {}\n", cfg.feature_set.name()));
    header.push_str(&format!(
        "n_targets = {}\n",
        cfg.n_targets.map_or("none".to_string(), |t| t.to_string())
    ));
    header.push_str(&format!(
        "separate_fragment_head = {}\n",
        cfg.separate_fragment_head
    ));
    let node_vocabs: Vec<String> = cfg
        .feature_set
        .node_features()
        .iter()
        .map(|&(_, v)| v.to_string())
        .collect();
    let edge_vocabs: Vec<String> = cfg
        .feature_set
        .edge_features()
        .iter()
        .map(|&(_, v)| v.to_string())
        .collect();
    header.push_str(&format!("node_vocabs = {}\n", node_vocabs.join(",")));
    header.push_str(&format!("edge_vocabs = {}\n", edge_vocabs.join(",")));
    for (name, t) in model.named_params() {
        header.push_str(&format!("tensor {} {} {}\n", name, t.rows, t.cols));
    }

    let mut bytes = Vec::new();
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(header.len() as u32).to_le_bytes());
    bytes.extend_from_slice(header.as_bytes());
    for t in model.params() {
        for &v in &t.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    bytes
}

/// Reconstructs a model from checkpoint bytes.
pub fn from_bytes(bytes: &[u8]) -> Result<GinModel<f32>, CheckpointError> {
    let mut cur = std::io::Cursor::new(bytes);
    let mut magic = [0u8; 4];
    cur.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut word = [0u8; 4];
    cur.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != FORMAT_VERSION {
        return Err(CheckpointError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    cur.read_exact(&mut word)?;
    let header_len = u32::from_le_bytes(word) as usize;
    let mut header_bytes = vec![0u8; header_len];
    cur.read_exact(&mut header_bytes)?;
    let header = String::from_utf8(header_bytes)
        .map_err(|e| CheckpointError::Header(e.to_string()))?;

    let mut kv = std::collections::HashMap::new();
    let mut manifest: Vec<(String, usize, usize)> = Vec::new();
    for line in header.lines() {
        if let Some(rest) = line.strip_prefix("tensor ") {
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(CheckpointError::Header(format!("bad tensor line: {line}")));
            }
            let rows = fields[1]
                .parse()
                .map_err(|_| CheckpointError::Header(format!("bad rows in {line}")))?;
            let cols = fields[2]
                .parse()
                .map_err(|_| CheckpointError::Header(format!("bad cols in {line}")))?;
            manifest.push((fields[0].to_string(), rows, cols));
        } else if let Some((k, v)) = line.split_once(" = ") {
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    let get = |k: &str| -> Result<&String, CheckpointError> {
        kv.get(k)
            .ok_or_else(|| CheckpointError::Header(format!("missing key {k}")))
    };
    let feature_set = FeatureSet::parse(get("feature_set")?)
        .ok_or_else(|| CheckpointError::Header("unknown feature_set".into()))?;
    let parse_usize = |k: &str| -> Result<usize, CheckpointError> {
        get(k)?
            .parse()
            .map_err(|_| CheckpointError::Header(format!("bad integer for {k}")))
    };
    let n_targets = match get("n_targets")?.as_str() {
        "none" => None,
        s => Some(
            s.parse()
                .map_err(|_| CheckpointError::Header("bad n_targets".into()))?,
        ),
    };
    let config = ModelConfig {
        feature_set,
        d: parse_usize("d")?,
        d_z: parse_usize("d_z")?,
        k_layers: parse_usize("k")?,
        n_targets,
        separate_fragment_head: get("separate_fragment_head")? == "true",
    };
    let mut model = GinModel::<f32>::zeros(&config);
    {
        let expected: Vec<(String, usize, usize)> = model
            .named_params()
            .iter()
            .map(|(n, t)| (n.clone(), t.rows, t.cols))
            .collect();
        if expected != manifest {
            return Err(CheckpointError::Header(
                "tensor manifest does not match model shapes".into(),
            ));
        }
    }
    for t in model.params_mut() {
        for v in t.data.iter_mut() {
            let mut buf = [0u8; 4];
            cur.read_exact(&mut buf)
                .map_err(|_| CheckpointError::Truncated)?;
            *v = f32::from_le_bytes(buf);
        }
    }
    Ok(model)
}

pub fn save(model: &GinModel<f32>, path: &Path) -> Result<(), CheckpointError> {
    crate::util::atomic_write(path, &to_bytes(model))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<GinModel<f32>, CheckpointError> {
    from_bytes(&std::fs::read(path)?)
}

/// Stable hex digest of a checkpoint's bytes, recorded in embedding tables.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = crate::util::StableHasher::new();
    for &b in bytes {
        h.write_u8(b);
    }
    format!("{:016x}", h.finish())
}
