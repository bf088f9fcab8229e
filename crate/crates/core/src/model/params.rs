use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::neural::{AttentionParams, LinearParams, Matrix, Real};

use super::ModelConfig;

pub const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct NormParams<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams<T> {
    pub attention: AttentionParams<T>,
    pub attention_norm: NormParams<T>,
    pub ffn_in: LinearParams<T>,
    pub ffn_out: LinearParams<T>,
    pub ffn_norm: NormParams<T>,
}

/// Every trainable tensor of the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    /// Rows cover the source ids followed by the offset translation ids.
    pub token_embedding: Matrix<T>,
    pub position_embedding: Matrix<T>,
    pub blocks: Vec<BlockParams<T>>,
    pub classifier: LinearParams<T>,
}

/// What a tensor is, for initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorKind {
    Weight,
    Bias,
    Gamma,
}

/// Name, shape and kind of one tensor, in checkpoint order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub kind: TensorKind,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Fixed tensor order shared by checkpoints, the optimizer and init.
pub fn manifest(cfg: &ModelConfig) -> Vec<TensorSpec> {
    use TensorKind::*;
    let h = cfg.hidden;
    let mut out = Vec::new();
    let mut push = |name: String, shape: Vec<usize>, kind| out.push(TensorSpec { name, shape, kind });
    push("token_embedding".into(), vec![cfg.input_space(), h], Weight);
    push("position_embedding".into(), vec![cfg.max_len, h], Weight);
    for l in 0..cfg.layers {
        for proj in ["query", "key", "value", "output"] {
            push(format!("blocks.{l}.attention.{proj}.weight"), vec![h, h], Weight);
            if proj != "key" {
                push(format!("blocks.{l}.attention.{proj}.bias"), vec![h], Bias);
            }
        }
        push(format!("blocks.{l}.attention_norm.gamma"), vec![h], Gamma);
        push(format!("blocks.{l}.attention_norm.beta"), vec![h], Bias);
        push(format!("blocks.{l}.ffn.input.weight"), vec![h, cfg.ffn_dim], Weight);
        push(format!("blocks.{l}.ffn.input.bias"), vec![cfg.ffn_dim], Bias);
        push(format!("blocks.{l}.ffn.output.weight"), vec![cfg.ffn_dim, h], Weight);
        push(format!("blocks.{l}.ffn.output.bias"), vec![h], Bias);
        push(format!("blocks.{l}.ffn_norm.gamma"), vec![h], Gamma);
        push(format!("blocks.{l}.ffn_norm.beta"), vec![h], Bias);
    }
    push("classifier.weight".into(), vec![h, cfg.label_count], Weight);
    push("classifier.bias".into(), vec![cfg.label_count], Bias);
    out
}

impl<T: Real> ModelParams<T> {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let h = cfg.hidden;
        let norm = || NormParams {
            gamma: vec![T::zero(); h],
            beta: vec![T::zero(); h],
        };
        ModelParams {
            token_embedding: Matrix::zeros(cfg.input_space(), h),
            position_embedding: Matrix::zeros(cfg.max_len, h),
            blocks: (0..cfg.layers)
                .map(|_| BlockParams {
                    attention: AttentionParams::zeros(h),
                    attention_norm: norm(),
                    ffn_in: LinearParams::zeros(h, cfg.ffn_dim),
                    ffn_out: LinearParams::zeros(cfg.ffn_dim, h),
                    ffn_norm: norm(),
                })
                .collect(),
            classifier: LinearParams::zeros(h, cfg.label_count),
        }
    }

    /// Weights ~ N(0, 0.02) drawn in manifest order from a ChaCha8 stream
    /// seeded by `cfg.seed`; biases 0; norm gains 1.
    pub fn init(cfg: &ModelConfig) -> Self {
        let mut params = Self::zeros(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let normal = Normal::new(0.0, INIT_STD).expect("valid std");
        for (spec, data) in manifest(cfg).iter().zip(params.slices_mut()) {
            match spec.kind {
                TensorKind::Weight => data.iter_mut().for_each(|v| *v = T::lit(normal.sample(&mut rng))),
                TensorKind::Gamma => data.iter_mut().for_each(|v| *v = T::one()),
                TensorKind::Bias => {}
            }
        }
        params
    }

    /// Builds parameters from flat arrays in manifest order.
    pub fn from_flat(cfg: &ModelConfig, arrays: &[Vec<T>]) -> Option<Self> {
        let mut params = Self::zeros(cfg);
        let mut slices = params.slices_mut();
        if slices.len() != arrays.len() {
            return None;
        }
        for (dst, src) in slices.iter_mut().zip(arrays) {
            if dst.len() != src.len() {
                return None;
            }
            dst.copy_from_slice(src);
        }
        drop(slices);
        Some(params)
    }

    pub fn slices(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = vec![self.token_embedding.data(), self.position_embedding.data()];
        for b in &self.blocks {
            let a = &b.attention;
            out.push(a.q.w.data());
            out.push(&a.q.b);
            out.push(a.k.data());
            for p in [&a.v, &a.o] {
                out.push(p.w.data());
                out.push(&p.b);
            }
            out.push(&b.attention_norm.gamma);
            out.push(&b.attention_norm.beta);
            out.push(b.ffn_in.w.data());
            out.push(&b.ffn_in.b);
            out.push(b.ffn_out.w.data());
            out.push(&b.ffn_out.b);
            out.push(&b.ffn_norm.gamma);
            out.push(&b.ffn_norm.beta);
        }
        out.push(self.classifier.w.data());
        out.push(&self.classifier.b);
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = vec![self.token_embedding.data_mut(), self.position_embedding.data_mut()];
        for b in &mut self.blocks {
            let a = &mut b.attention;
            out.push(a.q.w.data_mut());
            out.push(&mut a.q.b);
            out.push(a.k.data_mut());
            for p in [&mut a.v, &mut a.o] {
                out.push(p.w.data_mut());
                out.push(&mut p.b);
            }
            out.push(&mut b.attention_norm.gamma);
            out.push(&mut b.attention_norm.beta);
            out.push(b.ffn_in.w.data_mut());
            out.push(&mut b.ffn_in.b);
            out.push(b.ffn_out.w.data_mut());
            out.push(&mut b.ffn_out.b);
            out.push(&mut b.ffn_norm.gamma);
            out.push(&mut b.ffn_norm.beta);
        }
        out.push(self.classifier.w.data_mut());
        out.push(&mut self.classifier.b);
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn cast<U: Real>(&self, cfg: &ModelConfig) -> ModelParams<U> {
        let arrays: Vec<Vec<U>> = self
            .slices()
            .iter()
            .map(|s| s.iter().map(|v| U::from(*v).expect("castable")).collect())
            .collect();
        ModelParams::from_flat(cfg, &arrays).expect("same layout")
    }
}

impl ModelParams<f32> {
    /// Bit-level equality (distinguishes -0.0 and NaN payloads).
    pub fn bitwise_eq(&self, other: &Self) -> bool {
        let (a, b) = (self.slices(), other.slices());
        a.len() == b.len()
            && a.iter().zip(&b).all(|(x, y)| {
                x.len() == y.len() && x.iter().zip(y.iter()).all(|(p, q)| p.to_bits() == q.to_bits())
            })
    }
}
