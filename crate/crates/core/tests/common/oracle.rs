//! A second, deliberately naive implementation of every metric plus a
//! generator of randomly corrupted prediction/gold corpora.
//!
//! Nothing here calls into `glosser::eval`; splitting, alignment, n-gram
//! clipping and classification are all redone with plain loops.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub morpheme_acc_overall: f64,
    pub morpheme_acc_avg: f64,
    pub word_acc_overall: f64,
    pub word_acc_avg: f64,
    pub bleu: f64,
    /// precision, recall, f1
    pub stems: [f64; 3],
    pub grams: [f64; 3],
}

/// Cuts `s` at every `sep` that sits outside braces; empty parts are dropped.
fn cut(s: &str, sep: char) -> Vec<String> {
    let chars: Vec<char> = s.chars().collect();
    let mut parts = Vec::new();
    let mut start = 0;
    let mut depth: i64 = 0;
    for i in 0..chars.len() {
        if chars[i] == '{' {
            depth += 1;
        } else if chars[i] == '}' && depth > 0 {
            depth -= 1;
        } else if chars[i] == sep && depth == 0 {
            parts.push(chars[start..i].iter().collect::<String>());
            start = i + 1;
        }
    }
    parts.push(chars[start..].iter().collect::<String>());
    parts.into_iter().filter(|p| !p.is_empty()).collect()
}

fn words(line: &str) -> Vec<String> {
    line.split_whitespace().map(String::from).collect()
}

fn morphemes(word: &str) -> Vec<String> {
    cut(word, '-')
}

fn sub_pieces(word: &str) -> Vec<String> {
    let mut out = Vec::new();
    for m in morphemes(word) {
        out.extend(cut(&m, '.'));
    }
    out
}

fn is_gram(piece: &str, inventory: Option<&[String]>) -> bool {
    match inventory {
        Some(list) => list.iter().any(|g| g == piece),
        None => {
            for c in piece.chars() {
                if c.is_lowercase() {
                    return false;
                }
            }
            true
        }
    }
}

fn div(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn prf(tp: usize, predicted: usize, gold: usize) -> [f64; 3] {
    let p = div(tp, predicted);
    let r = div(tp, gold);
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    [p, r, f]
}

fn count_occurrences(haystack: &[String], needle: &[String]) -> usize {
    if needle.len() > haystack.len() {
        return 0;
    }
    (0..=haystack.len() - needle.len())
        .filter(|&i| haystack[i..i + needle.len()] == *needle)
        .count()
}

fn oracle_bleu(hyps: &[Vec<String>], refs: &[Vec<String>], max_n: usize, add_one: bool) -> f64 {
    let hyp_len: usize = hyps.iter().map(Vec::len).sum();
    let ref_len: usize = refs.iter().map(Vec::len).sum();
    if hyp_len == 0 {
        return 0.0;
    }
    let mut precisions = Vec::new();
    for n in 1..=max_n {
        let mut matched = 0usize;
        let mut total = 0usize;
        for (h, r) in hyps.iter().zip(refs) {
            if h.len() < n {
                continue;
            }
            // each distinct hypothesis n-gram, clipped by its reference count
            let mut seen: Vec<&[String]> = Vec::new();
            for i in 0..=h.len() - n {
                let gram = &h[i..i + n];
                total += 1;
                if seen.contains(&gram) {
                    continue;
                }
                seen.push(gram);
                matched += count_occurrences(h, gram).min(count_occurrences(r, gram));
            }
        }
        if total == 0 {
            continue;
        }
        let (m, t) = if add_one && n > 1 { (matched + 1, total + 1) } else { (matched, total) };
        precisions.push(m as f64 / t as f64);
    }
    if precisions.is_empty() || precisions.contains(&0.0) {
        return 0.0;
    }
    let k = precisions.len() as f64;
    let geo = precisions.iter().map(|p| p.ln() / k).sum::<f64>().exp();
    let bp = if hyp_len < ref_len {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    } else {
        1.0
    };
    bp * geo
}

pub fn oracle_evaluate(pred: &[String], gold: &[String], inventory: Option<&[String]>, add_one: bool) -> OracleReport {
    assert_eq!(pred.len(), gold.len());
    let (mut m_hit, mut m_tot, mut w_hit, mut w_tot) = (0, 0, 0, 0);
    let mut m_rates = Vec::new();
    let mut w_rates = Vec::new();
    // tp, predicted, gold
    let mut stem = [0usize; 3];
    let mut gram = [0usize; 3];

    for (p, g) in pred.iter().zip(gold) {
        let pw = words(p);
        let gw = words(g);
        let (mut sm_hit, mut sm_tot, mut sw_hit) = (0, 0, 0);
        for (i, gword) in gw.iter().enumerate() {
            let gm = morphemes(gword);
            sm_tot += gm.len();
            if i < pw.len() {
                if pw[i] == *gword {
                    sw_hit += 1;
                }
                let pm = morphemes(&pw[i]);
                for j in 0..gm.len() {
                    if j < pm.len() && pm[j] == gm[j] {
                        sm_hit += 1;
                    }
                }
            }
        }
        m_hit += sm_hit;
        m_tot += sm_tot;
        w_hit += sw_hit;
        w_tot += gw.len();
        if sm_tot > 0 {
            m_rates.push(sm_hit as f64 / sm_tot as f64);
        }
        if !gw.is_empty() {
            w_rates.push(sw_hit as f64 / gw.len() as f64);
        }

        let n_words = pw.len().max(gw.len());
        for i in 0..n_words {
            let ps = if i < pw.len() { sub_pieces(&pw[i]) } else { vec![] };
            let gs = if i < gw.len() { sub_pieces(&gw[i]) } else { vec![] };
            for piece in &ps {
                if is_gram(piece, inventory) {
                    gram[1] += 1;
                } else {
                    stem[1] += 1;
                }
            }
            for (j, piece) in gs.iter().enumerate() {
                let bucket = if is_gram(piece, inventory) { &mut gram } else { &mut stem };
                bucket[2] += 1;
                if ps.get(j) == Some(piece) {
                    bucket[0] += 1;
                }
            }
        }
    }

    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    let hyps: Vec<Vec<String>> = pred.iter().map(|p| words(p).iter().flat_map(|w| morphemes(w)).collect()).collect();
    let refs: Vec<Vec<String>> = gold.iter().map(|g| words(g).iter().flat_map(|w| morphemes(w)).collect()).collect();
    OracleReport {
        morpheme_acc_overall: div(m_hit, m_tot),
        morpheme_acc_avg: mean(&m_rates),
        word_acc_overall: div(w_hit, w_tot),
        word_acc_avg: mean(&w_rates),
        bleu: oracle_bleu(&hyps, &refs, 4, add_one),
        stems: prf(stem[0], stem[1], stem[2]),
        grams: prf(gram[0], gram[1], gram[2]),
    }
}

const STEMS: &[&str] = &["dog", "see", "house", "3sf.eat", "go", "man", "{N-x}tree", "big", "Neg.walk"];
const GRAMS: &[&str] = &["PL", "SG", "3SG", "PST", "ACC", "NEG", "1PL.EXCL", "DU"];

fn random_piece(rng: &mut ChaCha8Rng, first: bool) -> String {
    let pool = if first || rng.random_bool(0.15) { STEMS } else { GRAMS };
    pool[rng.random_range(0..pool.len())].to_string()
}

/// One gold corpus and a prediction derived from it by corrupting about
/// 30% of the pieces, occasionally also dropping or adding morphemes and
/// words.
pub fn random_corpus(seed: u64) -> (Vec<String>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(5..=50);
    let mut gold = Vec::with_capacity(n);
    let mut pred = Vec::with_capacity(n);
    for _ in 0..n {
        let n_words = rng.random_range(1..=8);
        let mut g_words = Vec::new();
        let mut p_words = Vec::new();
        for _ in 0..n_words {
            let n_morph = rng.random_range(1..=4);
            let g: Vec<String> = (0..n_morph).map(|j| random_piece(&mut rng, j == 0)).collect();
            let mut p: Vec<String> = g
                .iter()
                .enumerate()
                .map(|(j, m)| if rng.random_bool(0.3) { random_piece(&mut rng, j == 0) } else { m.clone() })
                .collect();
            if rng.random_bool(0.05) && p.len() > 1 {
                p.pop();
            }
            if rng.random_bool(0.05) {
                p.push(random_piece(&mut rng, false));
            }
            g_words.push(g.join("-"));
            if !rng.random_bool(0.04) {
                p_words.push(p.join("-"));
            }
        }
        if rng.random_bool(0.04) {
            p_words.push(random_piece(&mut rng, true));
        }
        gold.push(g_words.join(" "));
        pred.push(p_words.join(" "));
    }
    (pred, gold)
}

pub fn inventory() -> Vec<String> {
    ["PL", "3SG", "PST", "Neg", "3sf", "EXCL"].iter().map(|s| s.to_string()).collect()
}
