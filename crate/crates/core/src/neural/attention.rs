use super::layers::{linear_backward, softmax_in_place, LinearGrads, LinearParams};
use super::matrix::fmt_shape;
use super::{shape_err, Matrix, NeuralError, Real};

/// Additive pre-softmax bias for keys that may not be attended to.
pub const MASK_BIAS: f64 = -1e9;

/// How the rows of an activation matrix split into sequences.
///
/// Rows `b * seq_len .. (b + 1) * seq_len` belong to sequence `b`; a row
/// whose `key_valid` entry is false (padding) is never attended to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqLayout {
    pub seq_len: usize,
    pub key_valid: Vec<bool>,
}

impl SeqLayout {
    /// A single unmasked sequence.
    pub fn single(len: usize) -> Self {
        SeqLayout {
            seq_len: len,
            key_valid: vec![true; len],
        }
    }

    /// Padded batch with the given true lengths.
    pub fn padded(seq_len: usize, lengths: &[usize]) -> Self {
        let key_valid = lengths
            .iter()
            .flat_map(|&l| (0..seq_len).map(move |i| i < l))
            .collect();
        SeqLayout { seq_len, key_valid }
    }

    pub fn rows(&self) -> usize {
        self.key_valid.len()
    }

    pub fn batch(&self) -> usize {
        self.key_valid.len() / self.seq_len.max(1)
    }
}

/// Query/key/value/output projections, all `d x d`. Heads are contiguous
/// column blocks of width `d / heads`.
///
/// The key projection has no bias: a key bias adds the same `q . b` to every
/// score of a query, which the softmax cancels, so it could never be learned.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams<T> {
    pub q: LinearParams<T>,
    pub k: Matrix<T>,
    pub v: LinearParams<T>,
    pub o: LinearParams<T>,
}

impl<T: Real> AttentionParams<T> {
    pub fn zeros(d: usize) -> Self {
        AttentionParams {
            q: LinearParams::zeros(d, d),
            k: Matrix::zeros(d, d),
            v: LinearParams::zeros(d, d),
            o: LinearParams::zeros(d, d),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AttentionCache<T> {
    x: Matrix<T>,
    q: Matrix<T>,
    k: Matrix<T>,
    v: Matrix<T>,
    context: Matrix<T>,
    /// Row-major `seq_len x seq_len` weights per (sequence, head).
    probs: Vec<Vec<T>>,
    heads: usize,
    seq_len: usize,
}

impl<T: Real> AttentionCache<T> {
    /// Attention weights of one (sequence, head) pair; row = query.
    pub fn weights(&self, seq: usize, head: usize) -> &[T] {
        &self.probs[seq * self.heads + head]
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionGrads<T> {
    pub x: Matrix<T>,
    pub q: LinearGrads<T>,
    /// Gradient of the key weight.
    pub k: Matrix<T>,
    pub v: LinearGrads<T>,
    pub o: LinearGrads<T>,
}

fn check_shapes<T: Real>(
    x: &Matrix<T>,
    params: &AttentionParams<T>,
    heads: usize,
    layout: &SeqLayout,
) -> Result<(), NeuralError> {
    let d = x.cols();
    if heads == 0 || !d.is_multiple_of(heads) {
        return Err(shape_err("attention", format!("model width divisible by {heads} heads"), d));
    }
    if layout.seq_len == 0 || layout.rows() != x.rows() || !x.rows().is_multiple_of(layout.seq_len) {
        return Err(shape_err(
            "attention",
            format!("{} rows in whole sequences of {}", layout.rows(), layout.seq_len),
            x.rows(),
        ));
    }
    for p in [&params.q, &params.v, &params.o] {
        if p.w.shape() != (d, d) || p.b.len() != d {
            return Err(shape_err("attention", fmt_shape((d, d)), fmt_shape(p.w.shape())));
        }
    }
    if params.k.shape() != (d, d) {
        return Err(shape_err("attention", fmt_shape((d, d)), fmt_shape(params.k.shape())));
    }
    Ok(())
}

/// Multi-head scaled dot-product self-attention.
pub fn attention_forward<T: Real>(
    x: &Matrix<T>,
    params: &AttentionParams<T>,
    heads: usize,
    layout: &SeqLayout,
) -> Result<(Matrix<T>, AttentionCache<T>), NeuralError> {
    check_shapes(x, params, heads, layout)?;
    let d = x.cols();
    let dh = d / heads;
    let t = layout.seq_len;
    let scale = T::one() / T::lit(dh as f64).sqrt();
    let bias = T::lit(MASK_BIAS);

    let q = params.q.forward(x)?;
    let k = x.matmul(&params.k)?;
    let v = params.v.forward(x)?;
    let mut context = Matrix::zeros(x.rows(), d);
    let mut probs = Vec::with_capacity(layout.batch() * heads);

    for b in 0..layout.batch() {
        let base = b * t;
        for h in 0..heads {
            let cols = h * dh..(h + 1) * dh;
            let mut p = vec![T::zero(); t * t];
            for i in 0..t {
                let qi = &q.row(base + i)[cols.clone()];
                let row = &mut p[i * t..(i + 1) * t];
                for (j, s) in row.iter_mut().enumerate() {
                    let kj = &k.row(base + j)[cols.clone()];
                    let mut acc = T::zero();
                    for (&a, &c) in qi.iter().zip(kj) {
                        acc += a * c;
                    }
                    *s = acc * scale;
                    if !layout.key_valid[base + j] {
                        *s += bias;
                    }
                }
                softmax_in_place(row);
                let out = &mut context.row_mut(base + i)[cols.clone()];
                for (j, &w) in row.iter().enumerate() {
                    for (o, &vv) in out.iter_mut().zip(&v.row(base + j)[cols.clone()]) {
                        *o += w * vv;
                    }
                }
            }
            probs.push(p);
        }
    }

    let out = params.o.forward(&context)?;
    Ok((
        out,
        AttentionCache {
            x: x.clone(),
            q,
            k,
            v,
            context,
            probs,
            heads,
            seq_len: t,
        },
    ))
}

pub fn attention_backward<T: Real>(
    cache: &AttentionCache<T>,
    params: &AttentionParams<T>,
    grad_out: &Matrix<T>,
) -> Result<AttentionGrads<T>, NeuralError> {
    let go = linear_backward(&cache.context, &params.o.w, grad_out)?;
    let d_ctx = &go.x;
    let rows = cache.x.rows();
    let d = cache.x.cols();
    let heads = cache.heads;
    let dh = d / heads;
    let t = cache.seq_len;
    let scale = T::one() / T::lit(dh as f64).sqrt();

    let mut dq = Matrix::zeros(rows, d);
    let mut dk = Matrix::zeros(rows, d);
    let mut dv = Matrix::zeros(rows, d);
    let mut dp = vec![T::zero(); t];

    for b in 0..rows / t {
        let base = b * t;
        for h in 0..heads {
            let cols = h * dh..(h + 1) * dh;
            let p = &cache.probs[b * heads + h];
            for i in 0..t {
                let prow = &p[i * t..(i + 1) * t];
                let gi = &d_ctx.row(base + i)[cols.clone()];
                // dP[i][j] = dctx_i . v_j, and dV_j += P[i][j] dctx_i
                let mut weighted = T::zero();
                for j in 0..t {
                    let vj = &cache.v.row(base + j)[cols.clone()];
                    let mut acc = T::zero();
                    for (&a, &c) in gi.iter().zip(vj) {
                        acc += a * c;
                    }
                    dp[j] = acc;
                    weighted += prow[j] * acc;
                    let w = prow[j];
                    if w != T::zero() {
                        for (o, &g) in dv.row_mut(base + j)[cols.clone()].iter_mut().zip(gi) {
                            *o += w * g;
                        }
                    }
                }
                // softmax backward, then into the scaled scores
                for j in 0..t {
                    let ds = prow[j] * (dp[j] - weighted) * scale;
                    if ds == T::zero() {
                        continue;
                    }
                    let kj = &cache.k.row(base + j)[cols.clone()];
                    for (o, &kk) in dq.row_mut(base + i)[cols.clone()].iter_mut().zip(kj) {
                        *o += ds * kk;
                    }
                    let qi = &cache.q.row(base + i)[cols.clone()];
                    for (o, &qq) in dk.row_mut(base + j)[cols.clone()].iter_mut().zip(qi) {
                        *o += ds * qq;
                    }
                }
            }
        }
    }

    let gq = linear_backward(&cache.x, &params.q.w, &dq)?;
    let gk = cache.x.matmul_tn(&dk)?;
    let gv = linear_backward(&cache.x, &params.v.w, &dv)?;
    let mut gx = gq.x.clone();
    gx.add_assign(&dk.matmul_nt(&params.k)?)?;
    gx.add_assign(&gv.x)?;
    Ok(AttentionGrads {
        x: gx,
        q: gq,
        k: gk,
        v: gv,
        o: go,
    })
}
