use crate::igt::IgtEntry;
use crate::neural::Matrix;
use crate::textproc::{decode_predictions, encode_example, EncodeError, TokenizedExample, SPECIAL_COUNT};
use crate::Track;

use super::checkpoint::ModelCheckpoint;
use super::encoder::{forward, Batch};
use super::ModelError;

/// Entries per forward pass during prediction.
pub const PREDICT_BATCH: usize = 16;

/// Highest-scoring real label; pad/unknown/separator are never chosen and
/// ties go to the lowest id.
pub fn argmax_label(logits: &[f32]) -> Option<usize> {
    let mut best: Option<(usize, f32)> = None;
    for (id, &v) in logits.iter().enumerate().skip(SPECIAL_COUNT) {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((id, v));
        }
    }
    best.map(|(id, _)| id)
}

fn encode_for_prediction(
    ckpt: &ModelCheckpoint,
    entry: &IgtEntry,
) -> Result<Option<TokenizedExample>, ModelError> {
    let unlabeled = IgtEntry {
        gloss: None,
        ..entry.clone()
    };
    match encode_example(&unlabeled, &ckpt.vocabularies, &ckpt.encode_config()) {
        Ok(ex) => Ok(Some(ex)),
        Err(EncodeError::EmptyInput) => Ok(None),
        Err(e) => Err(ModelError::InvalidConfig(e.to_string())),
    }
}

/// Per-entry logits at the labeled (source) positions, `None` for entries
/// whose source line has no tokens.
pub fn predict_logits(
    ckpt: &ModelCheckpoint,
    entries: &[IgtEntry],
    track: Track,
) -> Result<Vec<Option<Matrix<f32>>>, ModelError> {
    Ok(run(ckpt, entries, track)?
        .into_iter()
        .map(|r| r.map(|(_, logits)| logits))
        .collect())
}

type Scored = Option<(Vec<String>, Matrix<f32>)>;

fn run(ckpt: &ModelCheckpoint, entries: &[IgtEntry], track: Track) -> Result<Vec<Scored>, ModelError> {
    if track != ckpt.track {
        return Err(ModelError::TrackMismatch {
            checkpoint: ckpt.track,
            requested: track,
        });
    }
    let encoded = entries
        .iter()
        .map(|e| encode_for_prediction(ckpt, e))
        .collect::<Result<Vec<_>, _>>()?;

    let mut out: Vec<Scored> = vec![None; entries.len()];
    let present: Vec<usize> = (0..entries.len()).filter(|&i| encoded[i].is_some()).collect();
    for chunk in present.chunks(PREDICT_BATCH) {
        let examples: Vec<&TokenizedExample> = chunk.iter().map(|&i| encoded[i].as_ref().unwrap()).collect();
        let batch = Batch::from_examples(&examples);
        let logits = forward(&ckpt.params, &ckpt.config, &batch)?;
        for (b, (&entry_idx, ex)) in chunk.iter().zip(&examples).enumerate() {
            let rows: Vec<Vec<f32>> = ex
                .label_positions
                .iter()
                .map(|&p| logits.row(batch.row(b, p)).to_vec())
                .collect();
            out[entry_idx] = Some((ex.tokens.clone(), Matrix::from_rows(&rows)?));
        }
    }
    Ok(out)
}

/// Predicted gloss line for every entry (empty for entries with no tokens).
pub fn predict(ckpt: &ModelCheckpoint, entries: &[IgtEntry], track: Track) -> Result<Vec<String>, ModelError> {
    let scored = run(ckpt, entries, track)?;
    let mut lines = Vec::with_capacity(entries.len());
    for item in scored {
        let Some((tokens, logits)) = item else {
            lines.push(String::new());
            continue;
        };
        let ids: Vec<usize> = (0..logits.rows())
            .map(|r| argmax_label(logits.row(r)).ok_or(ModelError::InvalidConfig("label vocabulary has no labels".into())))
            .collect::<Result<_, _>>()?;
        let line = decode_predictions(&ids, &tokens, &ckpt.vocabularies.label, track)
            .map_err(|e| ModelError::InvalidConfig(e.to_string()))?;
        lines.push(line);
    }
    Ok(lines)
}

/// Copies of `entries` whose gloss lines are replaced by predictions
/// (removed for entries with no tokens).
pub fn annotate(ckpt: &ModelCheckpoint, entries: &[IgtEntry], track: Track) -> Result<Vec<IgtEntry>, ModelError> {
    let lines = predict(ckpt, entries, track)?;
    Ok(entries
        .iter()
        .zip(lines)
        .map(|(e, line)| IgtEntry {
            gloss: (!line.is_empty()).then_some(line),
            ..e.clone()
        })
        .collect())
}
