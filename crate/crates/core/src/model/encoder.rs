//! Forward and backward passes of the token-classification encoder.
//!
//! Post-norm blocks: `h = LN(h + Attn(h))`, `h = LN(h + FFN(h))` with a GELU
//! feed-forward, followed by a linear classifier applied at every position.

use crate::neural::{
    attention_backward, attention_forward, gelu, gelu_backward, layer_norm_backward, layer_norm_forward,
    linear_backward, AttentionCache, LayerNormCache, LinearParams, Matrix, Real, SeqLayout, LAYER_NORM_EPS,
};
use crate::textproc::{TokenizedExample, PAD_ID};

use super::params::{BlockParams, ModelParams, NormParams};
use super::{ModelConfig, ModelError};

/// Examples padded to a common length, flattened row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub ids: Vec<usize>,
    pub lengths: Vec<usize>,
    pub seq_len: usize,
}

impl Batch {
    pub fn from_examples(examples: &[&TokenizedExample]) -> Self {
        Self::padded_to(examples, examples.iter().map(|e| e.len()).max().unwrap_or(0))
    }

    /// Pads every example to `seq_len` (at least the longest example).
    pub fn padded_to(examples: &[&TokenizedExample], seq_len: usize) -> Self {
        let seq_len = examples.iter().map(|e| e.len()).max().unwrap_or(0).max(seq_len);
        let mut ids = Vec::with_capacity(examples.len() * seq_len);
        for e in examples {
            ids.extend_from_slice(&e.input_ids);
            ids.extend(std::iter::repeat_n(PAD_ID, seq_len - e.len()));
        }
        Batch {
            ids,
            lengths: examples.iter().map(|e| e.len()).collect(),
            seq_len,
        }
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    /// Row of position `pos` of example `b` in the flattened activations.
    pub fn row(&self, b: usize, pos: usize) -> usize {
        b * self.seq_len + pos
    }

    pub fn layout(&self) -> SeqLayout {
        SeqLayout::padded(self.seq_len, &self.lengths)
    }
}

struct BlockCache<T> {
    attention: AttentionCache<T>,
    attention_norm: LayerNormCache<T>,
    /// Output of the first sublayer, input of the feed-forward.
    mid: Matrix<T>,
    ffn_pre: Matrix<T>,
    ffn_act: Matrix<T>,
    ffn_norm: LayerNormCache<T>,
}

/// Activations kept for the backward pass.
pub struct ForwardCache<T> {
    ids: Vec<usize>,
    seq_len: usize,
    blocks: Vec<BlockCache<T>>,
    last_hidden: Matrix<T>,
}

fn check_batch(cfg: &ModelConfig, batch: &Batch) -> Result<(), ModelError> {
    if batch.is_empty() || batch.seq_len == 0 {
        return Err(ModelError::EmptyBatch);
    }
    if batch.seq_len > cfg.max_len {
        return Err(ModelError::SequenceTooLong {
            len: batch.seq_len,
            max_len: cfg.max_len,
        });
    }
    if let Some(&bad) = batch.ids.iter().find(|&&id| id >= cfg.input_space()) {
        return Err(ModelError::InvalidInputId {
            id: bad,
            space: cfg.input_space(),
        });
    }
    Ok(())
}

fn norm<T: Real>(x: &Matrix<T>, p: &NormParams<T>) -> Result<(Matrix<T>, LayerNormCache<T>), ModelError> {
    Ok(layer_norm_forward(x, &p.gamma, &p.beta, LAYER_NORM_EPS)?)
}

/// Logits for every row of `batch`, shape `(batch * seq_len) x label_count`.
pub fn forward<T: Real>(params: &ModelParams<T>, cfg: &ModelConfig, batch: &Batch) -> Result<Matrix<T>, ModelError> {
    forward_with_cache(params, cfg, batch).map(|(logits, _)| logits)
}

pub fn forward_with_cache<T: Real>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    batch: &Batch,
) -> Result<(Matrix<T>, ForwardCache<T>), ModelError> {
    check_batch(cfg, batch)?;
    let t = batch.seq_len;
    let layout = batch.layout();

    let mut h = Matrix::zeros(batch.ids.len(), cfg.hidden);
    for (r, &id) in batch.ids.iter().enumerate() {
        let tok = params.token_embedding.row(id);
        let pos = params.position_embedding.row(r % t);
        for ((o, &a), &b) in h.row_mut(r).iter_mut().zip(tok).zip(pos) {
            *o = a + b;
        }
    }

    let mut caches = Vec::with_capacity(params.blocks.len());
    for block in &params.blocks {
        let (h_next, cache) = block_forward(block, cfg.heads, &layout, &h)?;
        caches.push(cache);
        h = h_next;
    }

    let logits = params.classifier.forward(&h)?;
    Ok((
        logits,
        ForwardCache {
            ids: batch.ids.clone(),
            seq_len: t,
            blocks: caches,
            last_hidden: h,
        },
    ))
}

fn block_forward<T: Real>(
    block: &BlockParams<T>,
    heads: usize,
    layout: &SeqLayout,
    x: &Matrix<T>,
) -> Result<(Matrix<T>, BlockCache<T>), ModelError> {
    let (mut attended, attention) = attention_forward(x, &block.attention, heads, layout)?;
    attended.add_assign(x)?;
    let (mid, attention_norm) = norm(&attended, &block.attention_norm)?;

    let ffn_pre = block.ffn_in.forward(&mid)?;
    let ffn_act = gelu(&ffn_pre);
    let mut ffn_out = block.ffn_out.forward(&ffn_act)?;
    ffn_out.add_assign(&mid)?;
    let (out, ffn_norm) = norm(&ffn_out, &block.ffn_norm)?;

    Ok((
        out,
        BlockCache {
            attention,
            attention_norm,
            mid,
            ffn_pre,
            ffn_act,
            ffn_norm,
        },
    ))
}

fn set_linear<T: Real>(dst: &mut LinearParams<T>, w: Matrix<T>, b: Vec<T>) {
    dst.w = w;
    dst.b = b;
}

/// Gradients of every parameter given `d loss / d logits`.
pub fn backward<T: Real>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    cache: &ForwardCache<T>,
    grad_logits: &Matrix<T>,
) -> Result<ModelParams<T>, ModelError> {
    let mut grads = ModelParams::zeros(cfg);

    let gc = linear_backward(&cache.last_hidden, &params.classifier.w, grad_logits)?;
    set_linear(&mut grads.classifier, gc.w, gc.b);
    let mut dh = gc.x;

    for (l, block) in params.blocks.iter().enumerate().rev() {
        let bc = &cache.blocks[l];
        let gb = &mut grads.blocks[l];

        let g2 = layer_norm_backward(&bc.ffn_norm, &block.ffn_norm.gamma, &dh)?;
        gb.ffn_norm.gamma = g2.gamma;
        gb.ffn_norm.beta = g2.beta;
        let d_res2 = g2.x;

        let go = linear_backward(&bc.ffn_act, &block.ffn_out.w, &d_res2)?;
        set_linear(&mut gb.ffn_out, go.w, go.b);
        let d_pre = gelu_backward(&bc.ffn_pre, &go.x)?;
        let gi = linear_backward(&bc.mid, &block.ffn_in.w, &d_pre)?;
        set_linear(&mut gb.ffn_in, gi.w, gi.b);
        let mut d_mid = d_res2;
        d_mid.add_assign(&gi.x)?;

        let g1 = layer_norm_backward(&bc.attention_norm, &block.attention_norm.gamma, &d_mid)?;
        gb.attention_norm.gamma = g1.gamma;
        gb.attention_norm.beta = g1.beta;
        let d_res1 = g1.x;

        let ga = attention_backward(&bc.attention, &block.attention, &d_res1)?;
        set_linear(&mut gb.attention.q, ga.q.w, ga.q.b);
        gb.attention.k = ga.k;
        set_linear(&mut gb.attention.v, ga.v.w, ga.v.b);
        set_linear(&mut gb.attention.o, ga.o.w, ga.o.b);
        let mut d_in = d_res1;
        d_in.add_assign(&ga.x)?;
        dh = d_in;
    }

    for (r, &id) in cache.ids.iter().enumerate() {
        let g = dh.row(r);
        for (o, &v) in grads.token_embedding.row_mut(id).iter_mut().zip(g) {
            *o += v;
        }
        for (o, &v) in grads.position_embedding.row_mut(r % cache.seq_len).iter_mut().zip(g) {
            *o += v;
        }
    }
    Ok(grads)
}

/// Cross-entropy targets for every row: gold labels at labeled positions,
/// `None` elsewhere (separator, translation, padding).
pub fn row_targets(examples: &[&TokenizedExample], batch: &Batch) -> Vec<Option<usize>> {
    let mut targets = vec![None; batch.ids.len()];
    for (b, e) in examples.iter().enumerate() {
        if let Some(labels) = &e.label_ids {
            for (&pos, &label) in e.label_positions.iter().zip(labels) {
                targets[batch.row(b, pos)] = Some(label);
            }
        }
    }
    targets
}
