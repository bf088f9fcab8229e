use std::collections::HashMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BleuSmoothing {
    #[default]
    None,
    /// Add one to the matches and totals of every order above 1.
    AddOne,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus BLEU over token sequences (one hypothesis and one reference per
/// sentence). Orders with no hypothesis n-grams anywhere are left out of the
/// geometric mean.
pub fn corpus_bleu(hyps: &[Vec<String>], refs: &[Vec<String>], max_n: usize, smoothing: BleuSmoothing) -> f64 {
    assert_eq!(hyps.len(), refs.len(), "one reference per hypothesis");
    let mut matches = vec![0usize; max_n];
    let mut totals = vec![0usize; max_n];
    let mut hyp_len = 0usize;
    let mut ref_len = 0usize;

    for (h, r) in hyps.iter().zip(refs) {
        hyp_len += h.len();
        ref_len += r.len();
        for n in 1..=max_n {
            let ref_counts = ngram_counts(r, n);
            for (gram, count) in ngram_counts(h, n) {
                matches[n - 1] += count.min(ref_counts.get(gram).copied().unwrap_or(0));
                totals[n - 1] += count;
            }
        }
    }

    if hyp_len == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=max_n {
        let (m, t) = (matches[n - 1], totals[n - 1]);
        if t == 0 {
            continue;
        }
        let (m, t) = match smoothing {
            BleuSmoothing::AddOne if n > 1 => (m + 1, t + 1),
            _ => (m, t),
        };
        if m == 0 {
            return 0.0;
        }
        log_sum += (m as f64 / t as f64).ln();
        orders += 1;
    }
    if orders == 0 {
        return 0.0;
    }
    brevity_penalty(hyp_len, ref_len) * (log_sum / orders as f64).exp()
}

pub fn brevity_penalty(hyp_len: usize, ref_len: usize) -> f64 {
    if hyp_len == 0 {
        0.0
    } else if hyp_len < ref_len {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    } else {
        1.0
    }
}
