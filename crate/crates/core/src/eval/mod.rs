//! Glossing metrics: morpheme and word accuracy (overall and averaged per
//! sentence), stem/gram precision-recall-F1, and corpus BLEU over morpheme
//! gloss sequences.
//!
//! Predictions are aligned with the gold standard by position: word `i` of a
//! predicted line is compared with word `i` of the gold line, and within a
//! word, piece `j` with piece `j`. Missing predicted pieces count as errors,
//! surplus ones only dilute precision.

mod bleu;
mod pieces;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::igt::IgtEntry;
use crate::Track;

pub use bleu::{brevity_penalty, corpus_bleu, BleuSmoothing};
pub use pieces::{classify_piece, split_word_gloss, GlossPiece, GramInventory, PieceKind};

use pieces::word_sub_pieces;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("{pred} predicted sentences but {gold} gold sentences")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("gold entry {index} has no gloss line")]
    MissingGloss { index: usize },
}

/// Overall (pooled) and per-sentence-averaged accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Accuracy {
    pub overall: f64,
    pub avg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_counts(true_pos: usize, predicted: usize, gold: usize) -> Self {
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let precision = ratio(true_pos, predicted);
        let recall = ratio(true_pos, gold);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf { precision, recall, f1 }
    }
}

/// Raw counts behind [`Prf`] for one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub true_pos: usize,
    pub predicted: usize,
    pub gold: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StemGramScores {
    pub stems: Prf,
    pub grams: Prf,
    pub stem_counts: ClassCounts,
    pub gram_counts: ClassCounts,
}

fn check_lengths<P, G>(pred: &[P], gold: &[G]) -> Result<(), EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    Ok(())
}

fn ratio(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

fn accuracy_from(per_sentence: &[(usize, usize)]) -> Accuracy {
    let hits: usize = per_sentence.iter().map(|s| s.0).sum();
    let total: usize = per_sentence.iter().map(|s| s.1).sum();
    let scored: Vec<f64> = per_sentence
        .iter()
        .filter(|s| s.1 > 0)
        .map(|&(h, t)| h as f64 / t as f64)
        .collect();
    let avg = if scored.is_empty() {
        0.0
    } else {
        scored.iter().sum::<f64>() / scored.len() as f64
    };
    Accuracy {
        overall: ratio(hits, total),
        avg,
    }
}

/// (matches, gold pieces) of one sentence.
fn sentence_morpheme_hits(pred: &str, gold: &str) -> (usize, usize) {
    let pred_words: Vec<&str> = pred.split_whitespace().collect();
    let mut hits = 0;
    let mut total = 0;
    for (i, gw) in gold.split_whitespace().enumerate() {
        let g = split_word_gloss(gw);
        total += g.len();
        if let Some(pw) = pred_words.get(i) {
            let p = split_word_gloss(pw);
            hits += g.iter().zip(&p).filter(|(a, b)| a == b).count();
        }
    }
    (hits, total)
}

fn sentence_word_hits(pred: &str, gold: &str) -> (usize, usize) {
    let pred_words: Vec<&str> = pred.split_whitespace().collect();
    let mut hits = 0;
    let mut total = 0;
    for (i, gw) in gold.split_whitespace().enumerate() {
        total += 1;
        if pred_words.get(i) == Some(&gw) {
            hits += 1;
        }
    }
    (hits, total)
}

pub fn morpheme_accuracy<P: AsRef<str>, G: AsRef<str>>(pred: &[P], gold: &[G]) -> Result<Accuracy, EvalError> {
    check_lengths(pred, gold)?;
    let per: Vec<_> = pred
        .iter()
        .zip(gold)
        .map(|(p, g)| sentence_morpheme_hits(p.as_ref(), g.as_ref()))
        .collect();
    Ok(accuracy_from(&per))
}

pub fn word_accuracy<P: AsRef<str>, G: AsRef<str>>(pred: &[P], gold: &[G]) -> Result<Accuracy, EvalError> {
    check_lengths(pred, gold)?;
    let per: Vec<_> = pred
        .iter()
        .zip(gold)
        .map(|(p, g)| sentence_word_hits(p.as_ref(), g.as_ref()))
        .collect();
    Ok(accuracy_from(&per))
}

pub fn stem_gram_prf<P: AsRef<str>, G: AsRef<str>>(
    pred: &[P],
    gold: &[G],
    inventory: Option<&GramInventory>,
) -> Result<StemGramScores, EvalError> {
    check_lengths(pred, gold)?;
    let mut stems = ClassCounts::default();
    let mut grams = ClassCounts::default();
    for (p, g) in pred.iter().zip(gold) {
        let pw: Vec<Vec<String>> = p.as_ref().split_whitespace().map(word_sub_pieces).collect();
        let gw: Vec<Vec<String>> = g.as_ref().split_whitespace().map(word_sub_pieces).collect();
        for w in 0..pw.len().max(gw.len()) {
            let pp = pw.get(w).map(Vec::as_slice).unwrap_or(&[]);
            let gp = gw.get(w).map(Vec::as_slice).unwrap_or(&[]);
            for piece in pp {
                pick(classify_piece(piece, inventory), &mut stems, &mut grams).predicted += 1;
            }
            for (i, piece) in gp.iter().enumerate() {
                let counts = pick(classify_piece(piece, inventory), &mut stems, &mut grams);
                counts.gold += 1;
                if pp.get(i) == Some(piece) {
                    counts.true_pos += 1;
                }
            }
        }
    }
    Ok(StemGramScores {
        stems: Prf::from_counts(stems.true_pos, stems.predicted, stems.gold),
        grams: Prf::from_counts(grams.true_pos, grams.predicted, grams.gold),
        stem_counts: stems,
        gram_counts: grams,
    })
}

fn pick<'a>(kind: PieceKind, stems: &'a mut ClassCounts, grams: &'a mut ClassCounts) -> &'a mut ClassCounts {
    match kind {
        PieceKind::Stem => stems,
        PieceKind::Gram => grams,
    }
}

/// Morpheme gloss sequence of a gloss line.
pub fn morpheme_sequence(line: &str) -> Vec<String> {
    line.split_whitespace().flat_map(split_word_gloss).collect()
}

pub fn bleu<P: AsRef<str>, G: AsRef<str>>(
    pred: &[P],
    gold: &[G],
    max_n: usize,
    smoothing: BleuSmoothing,
) -> Result<f64, EvalError> {
    check_lengths(pred, gold)?;
    let hyps: Vec<Vec<String>> = pred.iter().map(|p| morpheme_sequence(p.as_ref())).collect();
    let refs: Vec<Vec<String>> = gold.iter().map(|g| morpheme_sequence(g.as_ref())).collect();
    Ok(corpus_bleu(&hyps, &refs, max_n, smoothing))
}

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    pub inventory: Option<GramInventory>,
    pub bleu_max_n: usize,
    pub bleu_smoothing: BleuSmoothing,
}

impl EvalOptions {
    pub fn new() -> Self {
        EvalOptions {
            inventory: None,
            bleu_max_n: 4,
            bleu_smoothing: BleuSmoothing::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReportCounts {
    pub sentences: usize,
    pub gold_words: usize,
    pub gold_morphemes: usize,
}

/// Every metric for one prediction/gold corpus pair.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub morpheme_acc_overall: f64,
    pub morpheme_acc_avg: f64,
    pub word_acc_overall: f64,
    pub word_acc_avg: f64,
    pub bleu: f64,
    pub stems: Prf,
    pub grams: Prf,
    pub counts: ReportCounts,
    /// Metrics whose denominator was empty and were reported as 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Scores predicted gloss lines against gold ones.
pub fn evaluate_lines<P: AsRef<str>, G: AsRef<str>>(
    pred: &[P],
    gold: &[G],
    opts: &EvalOptions,
) -> Result<MetricsReport, EvalError> {
    check_lengths(pred, gold)?;
    let morph = morpheme_accuracy(pred, gold)?;
    let word = word_accuracy(pred, gold)?;
    let prf = stem_gram_prf(pred, gold, opts.inventory.as_ref())?;
    let max_n = if opts.bleu_max_n == 0 { 4 } else { opts.bleu_max_n };
    let bleu = bleu(pred, gold, max_n, opts.bleu_smoothing)?;

    let counts = ReportCounts {
        sentences: gold.len(),
        gold_words: gold.iter().map(|g| g.as_ref().split_whitespace().count()).sum(),
        gold_morphemes: gold.iter().map(|g| morpheme_sequence(g.as_ref()).len()).sum(),
    };

    let mut warnings = Vec::new();
    if counts.gold_morphemes == 0 {
        warnings.push("no gold morphemes: accuracies reported as 0".to_string());
    }
    for (name, c) in [("stem", prf.stem_counts), ("gram", prf.gram_counts)] {
        if c.gold == 0 {
            warnings.push(format!("no gold {name} pieces: {name} recall reported as 0"));
        }
        if c.predicted == 0 {
            warnings.push(format!("no predicted {name} pieces: {name} precision reported as 0"));
        }
    }

    Ok(MetricsReport {
        morpheme_acc_overall: morph.overall,
        morpheme_acc_avg: morph.avg,
        word_acc_overall: word.overall,
        word_acc_avg: word.avg,
        bleu,
        stems: prf.stems,
        grams: prf.grams,
        counts,
        warnings,
    })
}

/// Scores aligned corpora; predicted entries without a gloss count as empty
/// predictions.
pub fn evaluate(pred: &[IgtEntry], gold: &[IgtEntry], opts: &EvalOptions) -> Result<MetricsReport, EvalError> {
    check_lengths(pred, gold)?;
    let gold_lines = gold
        .iter()
        .enumerate()
        .map(|(i, e)| e.gloss.as_deref().ok_or(EvalError::MissingGloss { index: i }))
        .collect::<Result<Vec<_>, _>>()?;
    let pred_lines: Vec<&str> = pred.iter().map(|e| e.gloss.as_deref().unwrap_or("")).collect();
    evaluate_lines(&pred_lines, &gold_lines, opts)
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text table, values in percent.
    pub fn to_table(&self, track: Track) -> String {
        let pct = |v: f64| format!("{:.1}", v * 100.0);
        let header = [
            "Track", "Morph.Ovr", "Morph.Avg", "Word.Ovr", "Word.Avg", "BLEU", "Stem.P", "Stem.R", "Stem.F1",
            "Gram.P", "Gram.R", "Gram.F1",
        ];
        let values = [
            track.to_string(),
            pct(self.morpheme_acc_overall),
            pct(self.morpheme_acc_avg),
            pct(self.word_acc_overall),
            pct(self.word_acc_avg),
            pct(self.bleu),
            pct(self.stems.precision),
            pct(self.stems.recall),
            pct(self.stems.f1),
            pct(self.grams.precision),
            pct(self.grams.recall),
            pct(self.grams.f1),
        ];
        let mut out = String::new();
        let widths: Vec<usize> = header.iter().zip(&values).map(|(h, v)| h.len().max(v.len())).collect();
        for (row_idx, row) in [header.map(String::from).to_vec(), values.to_vec()].iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  "));
            if row_idx == 0 {
                let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            }
        }
        out
    }
}
