use super::matrix::fmt_shape;
use super::{shape_err, Matrix, NeuralError, Real};

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Weight `[d_in x d_out]` and bias `[d_out]` of an affine map.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams<T> {
    pub w: Matrix<T>,
    pub b: Vec<T>,
}

impl<T: Real> LinearParams<T> {
    pub fn zeros(d_in: usize, d_out: usize) -> Self {
        LinearParams {
            w: Matrix::zeros(d_in, d_out),
            b: vec![T::zero(); d_out],
        }
    }

    pub fn forward(&self, x: &Matrix<T>) -> Result<Matrix<T>, NeuralError> {
        linear_forward(x, &self.w, &self.b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrads<T> {
    pub x: Matrix<T>,
    pub w: Matrix<T>,
    pub b: Vec<T>,
}

/// `x W + b`, with `b` broadcast over rows.
pub fn linear_forward<T: Real>(x: &Matrix<T>, w: &Matrix<T>, b: &[T]) -> Result<Matrix<T>, NeuralError> {
    if b.len() != w.cols() {
        return Err(shape_err("linear", format!("bias of length {}", w.cols()), b.len()));
    }
    let mut out = x.matmul(w)?;
    for r in 0..out.rows() {
        for (o, &bias) in out.row_mut(r).iter_mut().zip(b) {
            *o += bias;
        }
    }
    Ok(out)
}

pub fn linear_backward<T: Real>(
    x: &Matrix<T>,
    w: &Matrix<T>,
    grad_out: &Matrix<T>,
) -> Result<LinearGrads<T>, NeuralError> {
    if grad_out.shape() != (x.rows(), w.cols()) {
        return Err(shape_err(
            "linear_backward",
            fmt_shape((x.rows(), w.cols())),
            fmt_shape(grad_out.shape()),
        ));
    }
    let mut gb = vec![T::zero(); w.cols()];
    for r in 0..grad_out.rows() {
        for (g, &d) in gb.iter_mut().zip(grad_out.row(r)) {
            *g += d;
        }
    }
    Ok(LinearGrads {
        x: grad_out.matmul_nt(w)?,
        w: x.matmul_tn(grad_out)?,
        b: gb,
    })
}

/// Per-row statistics kept for the backward pass.
#[derive(Debug, Clone)]
pub struct LayerNormCache<T> {
    normalized: Matrix<T>,
    inv_std: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNormGrads<T> {
    pub x: Matrix<T>,
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
}

pub fn layer_norm_forward<T: Real>(
    x: &Matrix<T>,
    gamma: &[T],
    beta: &[T],
    eps: f64,
) -> Result<(Matrix<T>, LayerNormCache<T>), NeuralError> {
    let d = x.cols();
    if gamma.len() != d || beta.len() != d {
        return Err(shape_err(
            "layer_norm",
            format!("gamma/beta of length {d}"),
            format!("{}/{}", gamma.len(), beta.len()),
        ));
    }
    let n = T::lit(d as f64);
    let eps = T::lit(eps);
    let mut normalized = Matrix::zeros(x.rows(), d);
    let mut out = Matrix::zeros(x.rows(), d);
    let mut inv_std = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let row = x.row(r);
        let mean = row.iter().copied().sum::<T>() / n;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
        let inv = T::one() / (var + eps).sqrt();
        inv_std.push(inv);
        let xhat = normalized.row_mut(r);
        for (h, &v) in xhat.iter_mut().zip(row) {
            *h = (v - mean) * inv;
        }
        for ((o, &h), (&g, &b)) in out.row_mut(r).iter_mut().zip(normalized.row(r)).zip(gamma.iter().zip(beta)) {
            *o = h * g + b;
        }
    }
    Ok((out, LayerNormCache { normalized, inv_std }))
}

pub fn layer_norm_backward<T: Real>(
    cache: &LayerNormCache<T>,
    gamma: &[T],
    grad_out: &Matrix<T>,
) -> Result<LayerNormGrads<T>, NeuralError> {
    let xhat = &cache.normalized;
    if grad_out.shape() != xhat.shape() || gamma.len() != xhat.cols() {
        return Err(shape_err(
            "layer_norm_backward",
            fmt_shape(xhat.shape()),
            fmt_shape(grad_out.shape()),
        ));
    }
    let d = xhat.cols();
    let n = T::lit(d as f64);
    let mut gx = Matrix::zeros(xhat.rows(), d);
    let mut ggamma = vec![T::zero(); d];
    let mut gbeta = vec![T::zero(); d];
    let mut dxhat = vec![T::zero(); d];
    for r in 0..xhat.rows() {
        let dy = grad_out.row(r);
        let h = xhat.row(r);
        let mut sum_dxhat = T::zero();
        let mut sum_dxhat_h = T::zero();
        for j in 0..d {
            ggamma[j] += dy[j] * h[j];
            gbeta[j] += dy[j];
            dxhat[j] = dy[j] * gamma[j];
            sum_dxhat += dxhat[j];
            sum_dxhat_h += dxhat[j] * h[j];
        }
        let scale = cache.inv_std[r] / n;
        for (j, g) in gx.row_mut(r).iter_mut().enumerate() {
            *g = scale * (n * dxhat[j] - sum_dxhat - h[j] * sum_dxhat_h);
        }
    }
    Ok(LayerNormGrads {
        x: gx,
        gamma: ggamma,
        beta: gbeta,
    })
}

const GELU_K: f64 = 0.044_715;

fn sqrt_2_over_pi<T: Real>() -> T {
    T::lit((2.0 / std::f64::consts::PI).sqrt())
}

/// Tanh approximation of GELU.
pub fn gelu_scalar<T: Real>(x: T) -> T {
    let inner = sqrt_2_over_pi::<T>() * (x + T::lit(GELU_K) * x * x * x);
    T::lit(0.5) * x * (T::one() + inner.tanh())
}

fn gelu_derivative<T: Real>(x: T) -> T {
    let c = sqrt_2_over_pi::<T>();
    let k = T::lit(GELU_K);
    let t = (c * (x + k * x * x * x)).tanh();
    let half = T::lit(0.5);
    half * (T::one() + t) + half * x * (T::one() - t * t) * c * (T::one() + T::lit(3.0) * k * x * x)
}

pub fn gelu<T: Real>(x: &Matrix<T>) -> Matrix<T> {
    x.map(gelu_scalar)
}

pub fn gelu_backward<T: Real>(x: &Matrix<T>, grad_out: &Matrix<T>) -> Result<Matrix<T>, NeuralError> {
    if x.shape() != grad_out.shape() {
        return Err(shape_err("gelu_backward", fmt_shape(x.shape()), fmt_shape(grad_out.shape())));
    }
    let mut out = grad_out.clone();
    for (g, &v) in out.data_mut().iter_mut().zip(x.data()) {
        *g *= gelu_derivative(v);
    }
    Ok(out)
}

/// Numerically stable softmax of one row, in place.
pub(crate) fn softmax_in_place<T: Real>(row: &mut [T]) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

pub fn softmax_rows<T: Real>(x: &Matrix<T>) -> Matrix<T> {
    let mut out = x.clone();
    for r in 0..out.rows() {
        softmax_in_place(out.row_mut(r));
    }
    out
}

/// Mean negative log-likelihood over the rows whose target is `Some`.
///
/// Returns the loss and its gradient with respect to `logits`; rows with a
/// `None` target get an exactly-zero gradient.
pub fn cross_entropy<T: Real>(logits: &Matrix<T>, targets: &[Option<usize>]) -> Result<(T, Matrix<T>), NeuralError> {
    if targets.len() != logits.rows() {
        return Err(shape_err("cross_entropy", format!("{} targets", logits.rows()), targets.len()));
    }
    let classes = logits.cols();
    let active = targets.iter().filter(|t| t.is_some()).count();
    if active == 0 {
        return Err(NeuralError::EmptyBatch);
    }
    let scale = T::one() / T::lit(active as f64);
    let mut grad = Matrix::zeros(logits.rows(), classes);
    let mut loss = T::zero();
    for (r, target) in targets.iter().enumerate() {
        let Some(t) = *target else { continue };
        if t >= classes {
            return Err(NeuralError::InvalidTarget { target: t, classes });
        }
        let row = logits.row(r);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let log_z = row.iter().map(|&v| (v - max).exp()).sum::<T>().ln() + max;
        loss += log_z - row[t];
        for (g, &v) in grad.row_mut(r).iter_mut().zip(row) {
            *g = (v - log_z).exp() * scale;
        }
        grad.row_mut(r)[t] -= scale;
    }
    Ok((loss * scale, grad))
}
