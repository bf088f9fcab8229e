use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::igt::{validate_entry, IgtEntry};
use crate::neural::{cross_entropy, AdamWState};
use crate::textproc::{encode_example, EncodeConfig, TokenizedExample, Vocabularies};
use crate::Track;

use super::checkpoint::{ModelCheckpoint, TrainMeta, FORMAT_VERSION};
use super::encoder::{backward, forward_with_cache, row_targets, Batch};
use super::params::ModelParams;
use super::{ModelConfig, ModelError, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochControl {
    Continue,
    Stop,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: ModelCheckpoint,
    /// Mean loss per labeled position, one entry per completed epoch.
    pub losses: Vec<f64>,
    pub skipped: usize,
    pub warnings: Vec<String>,
}

pub fn train(
    corpus: &[IgtEntry],
    track: Track,
    model_config: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<TrainOutcome, ModelError> {
    train_with(corpus, track, model_config, train_config, |_, _| EpochControl::Continue)
}

/// Like [`train`], calling `on_epoch(epoch, loss)` after every epoch
/// (1-based); returning [`EpochControl::Stop`] ends training early.
pub fn train_with<F>(
    corpus: &[IgtEntry],
    track: Track,
    model_config: &ModelConfig,
    train_config: &TrainConfig,
    mut on_epoch: F,
) -> Result<TrainOutcome, ModelError>
where
    F: FnMut(usize, f64) -> EpochControl,
{
    model_config.validate()?;
    train_config.validate()?;

    let mut warnings = Vec::new();
    let mut warn = |msg: String| {
        log::warn!("{msg}");
        warnings.push(msg);
    };

    let mut usable: Vec<&IgtEntry> = Vec::new();
    for (i, e) in corpus.iter().enumerate() {
        if e.gloss.is_none() {
            warn(format!("entry {}: no gloss line, skipped", i + 1));
            continue;
        }
        let blocking: Vec<String> = validate_entry(e, track)
            .into_iter()
            .filter(|issue| issue.blocks_training())
            .map(|issue| issue.to_string())
            .collect();
        if !blocking.is_empty() {
            warn(format!("entry {}: {}, skipped", i + 1, blocking.join("; ")));
            continue;
        }
        usable.push(e);
    }

    let enc = EncodeConfig {
        track,
        max_len: model_config.max_len,
        lowercase_translation: model_config.lowercase_translation,
    };
    let owned: Vec<IgtEntry> = usable.iter().map(|e| (*e).clone()).collect();
    let vocabs = Vocabularies::from_corpus(&owned, &enc);

    let mut examples: Vec<TokenizedExample> = Vec::with_capacity(owned.len());
    for e in &owned {
        match encode_example(e, &vocabs, &enc) {
            Ok(ex) => examples.push(ex),
            Err(err) => warn(format!("entry {:?}: {err}, skipped", e.transcription)),
        }
    }
    if examples.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    let skipped = corpus.len() - examples.len();

    let cfg = ModelConfig {
        src_vocab_size: vocabs.source.len(),
        trans_vocab_size: vocabs.translation.len(),
        label_count: vocabs.label.len(),
        ..*model_config
    };
    cfg.validate()?;
    if cfg.label_count > 10 * examples.len() {
        warn(format!(
            "label explosion: {} labels for {} training entries",
            cfg.label_count,
            examples.len()
        ));
    }

    let mut params = ModelParams::<f32>::init(&cfg);
    let mut optimizer = AdamWState::<f32>::new(train_config.adamw(), params.slices().iter().map(|s| s.len()))?;
    let mut losses = Vec::with_capacity(train_config.epochs);
    let mut order: Vec<usize> = (0..examples.len()).collect();

    for epoch in 0..train_config.epochs {
        // ChaCha is counter-based: one stream per epoch.
        let mut rng = ChaCha8Rng::seed_from_u64(train_config.shuffle_seed);
        rng.set_stream(epoch as u64);
        order.sort_unstable();
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0f64;
        let mut positions = 0usize;
        for chunk in order.chunks(train_config.batch_size) {
            let batch_examples: Vec<&TokenizedExample> = chunk.iter().map(|&i| &examples[i]).collect();
            let batch = Batch::from_examples(&batch_examples);
            let targets = row_targets(&batch_examples, &batch);
            let labeled = targets.iter().filter(|t| t.is_some()).count();

            let (logits, cache) = forward_with_cache(&params, &cfg, &batch)?;
            let (loss, grad_logits) = cross_entropy(&logits, &targets)?;
            let grads = backward(&params, &cfg, &cache, &grad_logits)?;
            optimizer.step(&mut params.slices_mut(), &grads.slices())?;

            loss_sum += f64::from(loss) * labeled as f64;
            positions += labeled;
        }
        let epoch_loss = loss_sum / positions as f64;
        log::info!("epoch {}\tloss {epoch_loss:.6}", epoch + 1);
        losses.push(epoch_loss);
        if on_epoch(epoch + 1, epoch_loss) == EpochControl::Stop {
            break;
        }
    }

    let checkpoint = ModelCheckpoint {
        format_version: FORMAT_VERSION,
        config: cfg,
        track,
        vocabularies: vocabs,
        params,
        train_meta: TrainMeta {
            epochs_completed: losses.len(),
            final_loss: losses.last().copied(),
        },
    };
    Ok(TrainOutcome {
        checkpoint,
        losses,
        skipped,
        warnings,
    })
}
