//! Binary checkpoint format.
//!
//! ```text
//! "GLSK"                      4 bytes
//! format_version              u32 little-endian
//! header_len                  u32 little-endian
//! header                      header_len bytes of UTF-8 JSON
//! parameters                  f32 little-endian, manifest order
//! ```
//!
//! The JSON header holds the model config, the track, the three vocabulary
//! tables, the parameter manifest (name and shape of every tensor, in the
//! order the arrays follow) and the training metadata.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::textproc::{EncodeConfig, Vocabularies};
use crate::Track;

use super::params::{manifest, ModelParams};
use super::ModelConfig;

pub const MAGIC: &[u8; 4] = b"GLSK";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub epochs_completed: usize,
    pub final_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub format_version: u32,
    pub config: ModelConfig,
    pub track: Track,
    pub vocabularies: Vocabularies,
    pub params: ModelParams<f32>,
    pub train_meta: TrainMeta,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("unsupported checkpoint format version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    track: Track,
    vocabularies: Vocabularies,
    parameters: Vec<ManifestEntry>,
    train_meta: TrainMeta,
}

fn corrupt(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::Corrupt(msg.into())
}

impl ModelCheckpoint {
    pub fn encode_config(&self) -> EncodeConfig {
        EncodeConfig {
            track: self.track,
            max_len: self.config.max_len,
            lowercase_translation: self.config.lowercase_translation,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            config: self.config,
            track: self.track,
            vocabularies: self.vocabularies.clone(),
            parameters: manifest(&self.config)
                .into_iter()
                .map(|s| ManifestEntry {
                    name: s.name,
                    shape: s.shape,
                })
                .collect(),
            train_meta: self.train_meta,
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(12 + json.len() + 4 * self.params.parameter_count());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for slice in self.params.slices() {
            for v in slice {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let body = &bytes[12..];
        if body.len() < header_len {
            return Err(corrupt("truncated header"));
        }
        let header: Header =
            serde_json::from_slice(&body[..header_len]).map_err(|e| corrupt(format!("header: {e}")))?;
        let cfg = header.config;
        cfg.validate().map_err(|e| corrupt(e.to_string()))?;

        let v = &header.vocabularies;
        if v.source.len() != cfg.src_vocab_size
            || v.translation.len() != cfg.trans_vocab_size
            || v.label.len() != cfg.label_count
        {
            return Err(corrupt("vocabulary sizes disagree with config"));
        }

        let expected = manifest(&cfg);
        if expected.len() != header.parameters.len()
            || expected
                .iter()
                .zip(&header.parameters)
                .any(|(e, h)| e.name != h.name || e.shape != h.shape)
        {
            return Err(corrupt("parameter manifest does not match config"));
        }

        let data = &body[header_len..];
        let total: usize = expected.iter().map(|s| s.len()).sum();
        if data.len() != total * 4 {
            return Err(corrupt(format!(
                "expected {} bytes of parameters, found {}",
                total * 4,
                data.len()
            )));
        }
        let mut arrays = Vec::with_capacity(expected.len());
        let mut offset = 0;
        for spec in &expected {
            let n = spec.len();
            let arr: Vec<f32> = data[offset..offset + 4 * n]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            offset += 4 * n;
            arrays.push(arr);
        }
        let params = ModelParams::from_flat(&cfg, &arrays).ok_or_else(|| corrupt("parameter layout"))?;

        Ok(ModelCheckpoint {
            format_version: version,
            config: cfg,
            track: header.track,
            vocabularies: header.vocabularies,
            params,
            train_meta: header.train_meta,
        })
    }

    /// Bitwise equality of everything, including every parameter.
    pub fn bitwise_eq(&self, other: &Self) -> bool {
        self.format_version == other.format_version
            && self.config == other.config
            && self.track == other.track
            && self.vocabularies == other.vocabularies
            && self.train_meta.epochs_completed == other.train_meta.epochs_completed
            && self.train_meta.final_loss.map(f64::to_bits) == other.train_meta.final_loss.map(f64::to_bits)
            && self.params.bitwise_eq(&other.params)
    }
}

pub fn save_checkpoint(ckpt: &ModelCheckpoint, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
    fs::write(path, ckpt.to_bytes())?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelCheckpoint, CheckpointError> {
    ModelCheckpoint::from_bytes(&fs::read(path)?)
}
