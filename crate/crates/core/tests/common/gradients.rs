//! Finite-difference checks of every hand-written backward pass.
//!
//! Each layer is reduced to a scalar by a fixed random projection
//! `L = sum(R * output)`, so `dL/d output = R` and the analytic gradients come
//! straight from the layer's backward function.

use glosser::model::{backward, forward, forward_with_cache, Batch, ModelConfig, ModelParams};
use glosser::neural::{
    attention_backward, attention_forward, cross_entropy, gelu, gelu_backward, grad_check, layer_norm_backward,
    layer_norm_forward, linear_backward, linear_forward, AttentionParams, LinearParams, Matrix, SeqLayout,
    LAYER_NORM_EPS,
};
use glosser::textproc::{TokenizedExample, SPECIAL_COUNT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const EPS: f64 = 1e-4;
pub const TOLERANCE: f64 = 1e-5;
pub const SHAPES_PER_LAYER: usize = 20;

fn normal_vec(rng: &mut ChaCha8Rng, n: usize, std: f64) -> Vec<f64> {
    let dist = Normal::new(0.0, std).unwrap();
    (0..n).map(|_| dist.sample(rng)).collect()
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, std: f64) -> Matrix<f64> {
    Matrix::from_vec(rows, cols, normal_vec(rng, rows * cols, std)).unwrap()
}

fn projected(out: &Matrix<f64>, r: &Matrix<f64>) -> f64 {
    out.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

/// Checks `analytic` against `loss` for one flat parameter group.
fn check(mut values: Vec<f64>, analytic: &[f64], loss: impl FnMut(&[f64]) -> f64) -> f64 {
    grad_check(loss, &mut values, analytic, EPS)
}

pub fn linear(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, d_in, d_out) = (rng.random_range(1..6), rng.random_range(1..8), rng.random_range(1..8));
    let x = normal_matrix(&mut rng, n, d_in, 1.0);
    let w = normal_matrix(&mut rng, d_in, d_out, 1.0);
    let b = normal_vec(&mut rng, d_out, 1.0);
    let r = normal_matrix(&mut rng, n, d_out, 1.0);
    let g = linear_backward(&x, &w, &r).unwrap();

    let ex = check(x.data().to_vec(), g.x.data(), |v| {
        projected(&linear_forward(&Matrix::from_vec(n, d_in, v.to_vec()).unwrap(), &w, &b).unwrap(), &r)
    });
    let ew = check(w.data().to_vec(), g.w.data(), |v| {
        projected(&linear_forward(&x, &Matrix::from_vec(d_in, d_out, v.to_vec()).unwrap(), &b).unwrap(), &r)
    });
    let eb = check(b.clone(), &g.b, |v| projected(&linear_forward(&x, &w, v).unwrap(), &r));
    ex.max(ew).max(eb)
}

pub fn layer_norm(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, d) = (rng.random_range(1..6), rng.random_range(2..10));
    let x = normal_matrix(&mut rng, n, d, 1.0);
    let gamma: Vec<f64> = normal_vec(&mut rng, d, 0.5).iter().map(|v| 1.0 + v).collect();
    let beta = normal_vec(&mut rng, d, 0.5);
    let r = normal_matrix(&mut rng, n, d, 1.0);
    let (_, cache) = layer_norm_forward(&x, &gamma, &beta, LAYER_NORM_EPS).unwrap();
    let g = layer_norm_backward(&cache, &gamma, &r).unwrap();
    let run = |x: &Matrix<f64>, gamma: &[f64], beta: &[f64]| {
        projected(&layer_norm_forward(x, gamma, beta, LAYER_NORM_EPS).unwrap().0, &r)
    };

    let ex = check(x.data().to_vec(), g.x.data(), |v| {
        run(&Matrix::from_vec(n, d, v.to_vec()).unwrap(), &gamma, &beta)
    });
    let eg = check(gamma.clone(), &g.gamma, |v| run(&x, v, &beta));
    let eb = check(beta.clone(), &g.beta, |v| run(&x, &gamma, v));
    ex.max(eg).max(eb)
}

pub fn gelu_layer(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, d) = (rng.random_range(1..6), rng.random_range(1..10));
    let x = normal_matrix(&mut rng, n, d, 2.0);
    let r = normal_matrix(&mut rng, n, d, 1.0);
    let g = gelu_backward(&x, &r).unwrap();
    check(x.data().to_vec(), g.data(), |v| {
        projected(&gelu(&Matrix::from_vec(n, d, v.to_vec()).unwrap()), &r)
    })
}

/// Softmax followed by the negative log-likelihood, with some rows ignored.
pub fn softmax_cross_entropy(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, c) = (rng.random_range(1..8), rng.random_range(2..10));
    let logits = normal_matrix(&mut rng, n, c, 2.0);
    let mut targets: Vec<Option<usize>> = (0..n)
        .map(|_| rng.random_bool(0.75).then(|| rng.random_range(0..c)))
        .collect();
    if targets.iter().all(Option::is_none) {
        targets[0] = Some(0);
    }
    let (_, grad) = cross_entropy(&logits, &targets).unwrap();
    check(logits.data().to_vec(), grad.data(), |v| {
        cross_entropy(&Matrix::from_vec(n, c, v.to_vec()).unwrap(), &targets).unwrap().0
    })
}

fn projection(p: &mut AttentionParams<f64>, which: usize) -> &mut LinearParams<f64> {
    match which {
        0 => &mut p.q,
        1 => &mut p.v,
        _ => &mut p.o,
    }
}

pub fn attention(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let heads = rng.random_range(1..4);
    let d = heads * rng.random_range(1..4);
    let seq_len = rng.random_range(1..6);
    let batch = rng.random_range(1..4);
    let lengths: Vec<usize> = (0..batch).map(|_| rng.random_range(1..=seq_len)).collect();
    let layout = SeqLayout::padded(seq_len, &lengths);
    let rows = batch * seq_len;

    let x = normal_matrix(&mut rng, rows, d, 1.0);
    let mut params = AttentionParams::<f64>::zeros(d);
    for p in [&mut params.q, &mut params.v, &mut params.o] {
        *p = LinearParams {
            w: normal_matrix(&mut rng, d, d, 0.7),
            b: normal_vec(&mut rng, d, 0.3),
        };
    }
    params.k = normal_matrix(&mut rng, d, d, 0.7);
    let r = normal_matrix(&mut rng, rows, d, 1.0);
    let (_, cache) = attention_forward(&x, &params, heads, &layout).unwrap();
    let g = attention_backward(&cache, &params, &r).unwrap();
    let run = |x: &Matrix<f64>, p: &AttentionParams<f64>| projected(&attention_forward(x, p, heads, &layout).unwrap().0, &r);

    let mut worst = check(x.data().to_vec(), g.x.data(), |v| {
        run(&Matrix::from_vec(rows, d, v.to_vec()).unwrap(), &params)
    });
    worst = worst.max(check(params.k.data().to_vec(), g.k.data(), |v| {
        let mut p = params.clone();
        p.k = Matrix::from_vec(d, d, v.to_vec()).unwrap();
        run(&x, &p)
    }));
    for (which, pg) in [&g.q, &g.v, &g.o].into_iter().enumerate() {
        let lp = projection(&mut params.clone(), which).clone();
        worst = worst.max(check(lp.w.data().to_vec(), pg.w.data(), |v| {
            let mut p = params.clone();
            projection(&mut p, which).w = Matrix::from_vec(d, d, v.to_vec()).unwrap();
            run(&x, &p)
        }));
        worst = worst.max(check(lp.b.clone(), &pg.b, |v| {
            let mut p = params.clone();
            projection(&mut p, which).b = v.to_vec();
            run(&x, &p)
        }));
    }
    worst
}

/// Small model configuration for whole-network checks.
pub fn tiny_config(seed: u64) -> ModelConfig {
    ModelConfig {
        layers: 2,
        hidden: 8,
        heads: 2,
        ffn_dim: 12,
        max_len: 8,
        src_vocab_size: 7,
        trans_vocab_size: 5,
        label_count: 6,
        seed,
        lowercase_translation: true,
    }
}

/// Two examples of different lengths over the tiny config's id space.
pub fn tiny_examples(cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> Vec<TokenizedExample> {
    [(3, 2), (2, 1)]
        .iter()
        .map(|&(n_src, n_trans)| {
            let mut ids: Vec<usize> = (0..n_src).map(|_| rng.random_range(SPECIAL_COUNT..cfg.src_vocab_size)).collect();
            ids.push(glosser::textproc::SEP_ID);
            ids.extend((0..n_trans).map(|_| cfg.src_vocab_size + rng.random_range(SPECIAL_COUNT..cfg.trans_vocab_size)));
            TokenizedExample {
                input_ids: ids,
                label_positions: (0..n_src).collect(),
                label_ids: Some((0..n_src).map(|_| rng.random_range(SPECIAL_COUNT..cfg.label_count)).collect()),
                tokens: (0..n_src).map(|i| format!("t{i}")).collect(),
            }
        })
        .collect()
}

/// Norm-wise relative error `|a - n| / max(|a|, |n|)` between an analytic
/// gradient and central differences of `f`.
fn normwise_check(mut values: Vec<f64>, analytic: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let mut numeric = vec![0.0; values.len()];
    for i in 0..values.len() {
        let orig = values[i];
        values[i] = orig + EPS;
        let plus = f(&values);
        values[i] = orig - EPS;
        let minus = f(&values);
        values[i] = orig;
        numeric[i] = (plus - minus) / (2.0 * EPS);
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, n)| a - n).collect();
    norm(&diff) / norm(analytic).max(norm(&numeric)).max(1e-12)
}

/// Whole-network check in f64, parameters moved away from the small
/// initialization so every nonlinearity is exercised.
///
/// A network this deep always has some coordinates whose gradient is
/// nearly zero, where the element-wise ratio measures only the
/// finite-difference error, so each tensor is compared norm-wise.
pub fn full_model(seed: u64) -> f64 {
    let cfg = tiny_config(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::<f64>::init(&cfg);
    for s in params.slices_mut() {
        let noise = normal_vec(&mut rng, s.len(), 0.3);
        for (p, n) in s.iter_mut().zip(noise) {
            *p += n;
        }
    }
    let examples = tiny_examples(&cfg, &mut rng);
    let refs: Vec<&TokenizedExample> = examples.iter().collect();
    let batch = Batch::from_examples(&refs);
    let targets = glosser::model::row_targets(&refs, &batch);

    let (logits, cache) = forward_with_cache(&params, &cfg, &batch).unwrap();
    let (_, grad_logits) = cross_entropy(&logits, &targets).unwrap();
    let grads = backward(&params, &cfg, &cache, &grad_logits).unwrap();

    let flat: Vec<Vec<f64>> = params.slices().iter().map(|s| s.to_vec()).collect();
    let grad_flat: Vec<Vec<f64>> = grads.slices().iter().map(|s| s.to_vec()).collect();
    let mut worst = 0.0f64;
    for (i, (values, analytic)) in flat.iter().zip(&grad_flat).enumerate() {
        worst = worst.max(normwise_check(values.clone(), analytic, |v| {
            let mut arrays = flat.clone();
            arrays[i] = v.to_vec();
            let p = ModelParams::from_flat(&cfg, &arrays).unwrap();
            let logits = forward(&p, &cfg, &batch).unwrap();
            cross_entropy(&logits, &targets).unwrap().0
        }));
    }
    worst
}

type LayerCheck = (&'static str, fn(u64) -> f64);

/// `(layer, worst relative error over all shapes)` for every layer type.
pub fn suite() -> Vec<(&'static str, f64)> {
    let layers: [LayerCheck; 5] = [
        ("linear", linear),
        ("layer_norm", layer_norm),
        ("gelu", gelu_layer),
        ("softmax_cross_entropy", softmax_cross_entropy),
        ("attention", attention),
    ];
    let mut out: Vec<(&'static str, f64)> = layers
        .iter()
        .map(|&(name, f)| {
            let worst = (0..SHAPES_PER_LAYER as u64).map(|s| f(1000 + s)).fold(0.0, f64::max);
            (name, worst)
        })
        .collect();
    out.push(("full_model (norm-wise)", (0..5).map(full_model).fold(0.0, f64::max)));
    out
}
