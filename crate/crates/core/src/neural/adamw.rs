use serde::{Deserialize, Serialize};

use super::{shape_err, NeuralError, Real};

/// AdamW hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            lr: 2e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// One AdamW update of a single tensor at (1-based) step `step`.
///
/// The decay term uses the pre-update parameter and is not scaled by the
/// adaptive denominator.
pub fn adamw_update<T: Real>(param: &mut [T], grad: &[T], m: &mut [T], v: &mut [T], step: u64, hyper: &AdamWConfig) {
    let b1 = T::lit(hyper.beta1);
    let b2 = T::lit(hyper.beta2);
    let one = T::one();
    let bc1 = one - T::lit(hyper.beta1.powi(step as i32));
    let bc2 = one - T::lit(hyper.beta2.powi(step as i32));
    let lr = T::lit(hyper.lr);
    let eps = T::lit(hyper.eps);
    let decay = lr * T::lit(hyper.weight_decay);
    for i in 0..param.len() {
        let g = grad[i];
        m[i] = b1 * m[i] + (one - b1) * g;
        v[i] = b2 * v[i] + (one - b2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        let p = param[i];
        param[i] = p - lr * m_hat / (v_hat.sqrt() + eps) - decay * p;
    }
}

/// Moment buffers for a fixed list of parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState<T> {
    pub hyper: AdamWConfig,
    pub step: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Real> AdamWState<T> {
    pub fn new(hyper: AdamWConfig, sizes: impl IntoIterator<Item = usize>) -> Result<Self, NeuralError> {
        if !(0.0..1.0).contains(&hyper.beta1) || !(0.0..1.0).contains(&hyper.beta2) {
            return Err(shape_err("AdamWState", "betas in [0, 1)", format!("{}/{}", hyper.beta1, hyper.beta2)));
        }
        let (m, v): (Vec<_>, Vec<_>) = sizes
            .into_iter()
            .map(|n| (vec![T::zero(); n], vec![T::zero(); n]))
            .unzip();
        Ok(AdamWState { hyper, step: 0, m, v })
    }

    /// Advances the step counter and updates every tensor.
    pub fn step(&mut self, params: &mut [&mut [T]], grads: &[&[T]]) -> Result<(), NeuralError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(shape_err(
                "adamw_step",
                format!("{} tensors", self.m.len()),
                format!("{} params / {} grads", params.len(), grads.len()),
            ));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.m[i].len() || g.len() != self.m[i].len() {
                return Err(shape_err(
                    "adamw_step",
                    format!("tensor {i} of length {}", self.m[i].len()),
                    format!("{} / {}", p.len(), g.len()),
                ));
            }
        }
        self.step += 1;
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            adamw_update(p, g, m, v, self.step, &self.hyper);
        }
        Ok(())
    }
}
