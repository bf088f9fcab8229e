use serde::{Deserialize, Serialize};

use crate::neural::AdamWConfig;
use crate::textproc::SPECIAL_COUNT;

use super::ModelError;

/// Encoder shape and vocabulary sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub max_len: usize,
    pub src_vocab_size: usize,
    pub trans_vocab_size: usize,
    pub label_count: usize,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub lowercase_translation: bool,
}

fn default_true() -> bool {
    true
}

impl ModelConfig {
    /// Two layers of width 64: trainable on one CPU core in seconds.
    pub fn desk() -> Self {
        ModelConfig {
            layers: 2,
            hidden: 64,
            heads: 4,
            ffn_dim: 256,
            max_len: 128,
            src_vocab_size: SPECIAL_COUNT,
            trans_vocab_size: SPECIAL_COUNT,
            label_count: SPECIAL_COUNT,
            seed: 0,
            lowercase_translation: true,
        }
    }

    /// RoBERTa-base dimensions.
    pub fn paper() -> Self {
        ModelConfig {
            layers: 12,
            hidden: 768,
            heads: 12,
            ffn_dim: 3072,
            max_len: 512,
            ..Self::desk()
        }
    }

    pub fn input_space(&self) -> usize {
        self.src_vocab_size + self.trans_vocab_size
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.layers == 0 || self.hidden == 0 || self.heads == 0 || self.ffn_dim == 0 {
            return fail("layers, hidden, heads and ffn_dim must all be at least 1".into());
        }
        if !self.hidden.is_multiple_of(self.heads) {
            return fail(format!("hidden {} is not divisible by heads {}", self.hidden, self.heads));
        }
        if self.max_len < 2 {
            return fail(format!("max_len must be at least 2, got {}", self.max_len));
        }
        if self.src_vocab_size == 0 || self.trans_vocab_size == 0 || self.label_count == 0 {
            return fail("vocabulary sizes must be at least 1".into());
        }
        Ok(())
    }

    /// Closed-form parameter count.
    pub fn parameter_count(&self) -> usize {
        let h = self.hidden;
        let linear = |i: usize, o: usize| i * o + o;
        // the key projection has no bias
        let block = 4 * linear(h, h) - h + 2 * (2 * h) + linear(h, self.ffn_dim) + linear(self.ffn_dim, h);
        self.input_space() * h + self.max_len * h + self.layers * block + linear(h, self.label_count)
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::desk()
    }
}

/// Optimization schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub shuffle_seed: u64,
}

impl TrainConfig {
    /// Paper schedule with a step size suited to a small model trained from
    /// scratch.
    pub fn desk() -> Self {
        TrainConfig {
            lr: 3e-4,
            ..Self::paper()
        }
    }

    /// The published schedule: lr 2e-5, 80 epochs, batch 16, decay 0.01.
    pub fn paper() -> Self {
        TrainConfig {
            lr: 2e-5,
            epochs: 80,
            batch_size: 16,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            shuffle_seed: 0,
        }
    }

    pub fn adamw(&self) -> AdamWConfig {
        AdamWConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            weight_decay: self.weight_decay,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.epochs < 1 {
            return fail("epochs must be at least 1".into());
        }
        if self.batch_size < 1 {
            return fail("batch_size must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return fail(format!("betas must lie in [0, 1), got {} and {}", self.beta1, self.beta2));
        }
        let positive = |x: f64| x > 0.0;
        if !positive(self.lr) || !positive(self.eps) || self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            return fail("lr and eps must be positive and weight_decay non-negative".into());
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::desk()
    }
}
