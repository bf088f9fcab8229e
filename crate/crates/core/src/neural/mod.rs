//! Dense linear algebra and hand-differentiated layers.
//!
//! Everything is generic over [`Real`] so the same code trains in `f32` and
//! is gradient-checked in `f64`. There is no autodiff graph: each layer
//! returns whatever its backward pass needs and the model wires them up.

mod adamw;
mod attention;
mod gradcheck;
mod layers;
mod matrix;

pub use adamw::{adamw_update, AdamWConfig, AdamWState};
pub use attention::{
    attention_backward, attention_forward, AttentionCache, AttentionGrads, AttentionParams, SeqLayout, MASK_BIAS,
};
pub use gradcheck::{grad_check, relative_error};
pub use layers::{
    cross_entropy, gelu, gelu_backward, gelu_scalar, layer_norm_backward, layer_norm_forward, linear_backward,
    linear_forward, softmax_rows, LayerNormCache, LayerNormGrads, LinearGrads, LinearParams, LAYER_NORM_EPS,
};
pub use matrix::Matrix;

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};

/// Scalar type the layers are generic over (`f32` or `f64`).
pub trait Real:
    Float + FromPrimitive + Default + Debug + Display + Send + Sync + 'static + AddAssign + SubAssign + MulAssign + DivAssign + Sum
{
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("representable literal")
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + Default
        + Debug
        + Display
        + Send
        + Sync
        + 'static
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum
{
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NeuralError {
    #[error("{op}: shape mismatch, expected {expected} but found {found}")]
    ShapeMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },
    #[error("cross entropy over a batch where every position is ignored")]
    EmptyBatch,
    #[error("target {target} out of range for {classes} classes")]
    InvalidTarget { target: usize, classes: usize },
}

pub(crate) fn shape_err(op: &'static str, expected: impl Display, found: impl Display) -> NeuralError {
    NeuralError::ShapeMismatch {
        op,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
