//! The token-classification transformer and everything around it.

mod checkpoint;
mod config;
mod encoder;
mod params;
mod predict;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError, ModelCheckpoint, TrainMeta, FORMAT_VERSION, MAGIC};
pub use config::{ModelConfig, TrainConfig};
pub use encoder::{backward, forward, forward_with_cache, row_targets, Batch, ForwardCache};
pub use params::{manifest, BlockParams, ModelParams, NormParams, TensorKind, TensorSpec, INIT_STD};
pub use predict::{annotate, argmax_label, predict, predict_logits, PREDICT_BATCH};
pub use train::{train, train_with, EpochControl, TrainOutcome};

use crate::neural::NeuralError;
use crate::Track;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("sequence of length {len} exceeds max_len {max_len}")]
    SequenceTooLong { len: usize, max_len: usize },
    #[error("input id {id} outside the embedding space of {space}")]
    InvalidInputId { id: usize, space: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("training corpus has no usable glossed entries")]
    EmptyCorpus,
    #[error("checkpoint was trained for the {checkpoint} track, input is {requested}")]
    TrackMismatch { checkpoint: Track, requested: Track },
    #[error(transparent)]
    Neural(#[from] NeuralError),
}
