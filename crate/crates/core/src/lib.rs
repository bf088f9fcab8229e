//! Gloss-line prediction for Interlinear Glossed Text (IGT).
//!
//! Glossing is treated as per-token sequence labeling: every word (closed
//! track) or morpheme (open track) of the transcription receives one gloss
//! label from a small transformer encoder that also attends over the free
//! translation. The crate is organized bottom-up:
//!
//! - [`igt`]: the line-prefixed corpus format, validation, and statistics.
//! - [`textproc`]: track-aware tokenization, vocabularies, encoding/decoding.
//! - [`neural`]: dense matrices, hand-differentiated layers, AdamW, and a
//!   finite-difference gradient checker.
//! - [`model`]: the token-classification encoder, training, prediction and
//!   checkpoint persistence.
//! - [`eval`]: accuracy, stem/gram precision-recall-F1 and BLEU.
//! - [`synthetic`]: a deterministic toy-language generator used by the CLI
//!   and the acceptance suite.
//! - [`cli`]: the `glosser` command-line front end.

pub mod cli;
pub mod eval;
pub mod igt;
pub mod model;
pub mod neural;
pub mod synthetic;
pub mod textproc;

mod track;

pub use track::{ParseTrackError, Track};
