//! Adam training with clipping, per-fold epoch selection, and the k-member
//! ensemble.

mod config;
mod ensemble;
mod optim;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::TrainConfig;
pub use ensemble::{
    corpus_fingerprint, mean_distribution, predict_distribution, train_ensemble, Ensemble, EnsembleManifest,
    EnsemblePrediction, MemberSummary, ENSEMBLE_FILE,
};
pub use optim::{adam_step, clip_gradients, AdamState, BETA1, BETA2, EPSILON};

use crate::dataset::{AnnotationDistribution, LabelledTweet};
use crate::error::{Error, Result};
use crate::model::TrainedModel;
use crate::nn::{cross_entropy_with_logits, model_backward, model_forward, Gradients, Mode, ModelParams, Tensor};
use crate::scoring::truth_mean;
use crate::text::{EncodedTweet, Vocabulary};

/// An encoded tweet with its training target.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub encoded: EncodedTweet,
    pub target: [f32; 4],
    pub truth_mean: f64,
}

impl Sample {
    pub fn new(encoded: EncodedTweet, target: AnnotationDistribution) -> Self {
        Self {
            encoded,
            target: target.map(|x| x as f32),
            truth_mean: truth_mean(&target),
        }
    }
}

/// Preprocesses and encodes a labelled corpus.
pub fn prepare_samples(corpus: &[LabelledTweet], vocab: &Vocabulary, seq_len: usize) -> Vec<Sample> {
    corpus
        .par_iter()
        .map(|t| {
            Sample::new(
                crate::text::encode_text(&t.tweet.post_text, vocab, seq_len),
                t.truth.distribution(),
            )
        })
        .collect()
}

/// What a random stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Split = 0,
    Embedding = 1,
    Init = 2,
    Shuffle = 3,
    Dropout = 4,
}

/// Independent generator for `(seed, member, purpose, index)`. The four
/// words form the ChaCha key directly.
pub fn stream(seed: u64, member: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, word) in key.chunks_exact_mut(8).zip([seed, member, purpose as u64, index]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Mean gradient and mean loss over `batch`. Sample `i` draws its dropout
/// masks from `stream(.., Dropout, first_index + i)`. Per-sample gradients
/// may be computed in parallel but are summed in batch order.
pub fn batch_gradient(
    params: &ModelParams<f32>,
    batch: &[&Sample],
    config: &TrainConfig,
    member: u64,
    first_index: u64,
) -> Result<(Gradients<f32>, f64)> {
    let rates = config.dropout();
    let parts: Vec<(Gradients<f32>, f32)> = batch
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = stream(config.seed, member, Purpose::Dropout, first_index + i as u64);
            let fwd = model_forward(&s.encoded, params, Mode::Train, &rates, &mut rng)?;
            let cache = fwd.cache.expect("train mode keeps a cache");
            let loss = cross_entropy_with_logits(&cache.logits, &s.target);
            Ok((model_backward(&cache, &s.target, params)?, loss))
        })
        .collect::<Result<_>>()?;
    let mut total = Gradients::zeros(&params.config);
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f32;
    for (g, l) in &parts {
        total.add_scaled(g, scale);
        loss += *l as f64;
    }
    Ok((total, loss / batch.len() as f64))
}

/// Loss and fit of a model on a labelled set, in inference mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub mean_loss: f64,
    pub mse: f64,
    /// Share of samples whose most likely level is the target's most likely
    /// level.
    pub accuracy: f64,
}

pub fn evaluate_samples(params: &ModelParams<f32>, samples: &[Sample]) -> Result<Evaluation> {
    if samples.is_empty() {
        return Err(Error::EmptySet("evaluation"));
    }
    let argmax = |v: &[f32]| {
        v.iter()
            .enumerate()
            .fold(
                (0, f32::NEG_INFINITY),
                |best, (i, &x)| if x > best.1 { (i, x) } else { best },
            )
            .0
    };
    let rows: Vec<(f64, f64, bool)> = samples
        .par_iter()
        .map(|s| {
            let mut unused = ChaCha8Rng::seed_from_u64(0);
            let out = model_forward(&s.encoded, params, Mode::Infer, &config_free_rates(), &mut unused)?;
            let loss = cross_entropy_with_logits(&out.logits, &s.target) as f64;
            let p = [0, 1, 2, 3].map(|k| out.p[k] as f64);
            let err = truth_mean(&p) - s.truth_mean;
            Ok((loss, err * err, argmax(&out.p) == argmax(&s.target)))
        })
        .collect::<Result<_>>()?;
    let n = samples.len() as f64;
    Ok(Evaluation {
        mean_loss: rows.iter().map(|r| r.0).sum::<f64>() / n,
        mse: rows.iter().map(|r| r.1).sum::<f64>() / n,
        accuracy: rows.iter().filter(|r| r.2).count() as f64 / n,
    })
}

fn config_free_rates() -> crate::nn::DropoutRates {
    crate::nn::DropoutRates::NONE
}

/// One pass over `train` in a seeded random order, with the final short
/// batch kept. Returns the mean training loss.
pub fn train_epoch(
    params: &mut ModelParams<f32>,
    adam: &mut AdamState,
    train: &[Sample],
    config: &TrainConfig,
    member: u64,
    epoch: u64,
) -> Result<f64> {
    if train.is_empty() {
        return Err(Error::EmptySet("training"));
    }
    let mut order: Vec<&Sample> = train.iter().collect();
    order.shuffle(&mut stream(config.seed, member, Purpose::Shuffle, epoch));
    let mut loss_sum = 0.0;
    for (b, batch) in order.chunks(config.batch_size).enumerate() {
        let first = (epoch << 32) | (b * config.batch_size) as u64;
        let (mut grads, loss) = batch_gradient(params, batch, config, member, first)?;
        clip_gradients(&mut grads, config.clip_threshold as f32);
        adam_step(params, &grads, adam, config.learning_rate)?;
        loss_sum += loss * batch.len() as f64;
    }
    if !params.all_finite() {
        return Err(Error::Config("training diverged to non-finite parameters".into()));
    }
    Ok(loss_sum / train.len() as f64)
}

/// 1-based index of the smallest value; ties go to the earlier epoch.
pub fn select_best_epoch(curve: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in curve.iter().enumerate() {
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i + 1, v));
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub model: TrainedModel,
    pub history: Vec<EpochRecord>,
}

/// Shared starting point of every member: vocabulary, embedding matrix and
/// sequence length.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSeed<'a> {
    pub vocab: &'a Vocabulary,
    pub embedding: &'a Tensor<f32>,
    pub seq_len: usize,
}

/// Trains one member for up to `max_epochs` and keeps the parameters of the
/// epoch with the lowest validation MSE.
pub fn train_fold(
    train: &[Sample],
    val: &[Sample],
    start: &ModelSeed,
    config: &TrainConfig,
    member: u64,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<FoldOutcome> {
    if train.is_empty() {
        return Err(Error::EmptySet("training"));
    }
    if val.is_empty() {
        return Err(Error::EmptySet("validation"));
    }
    config.validate()?;
    let init_index = 0;
    let mut rng = stream(config.seed, member, Purpose::Init, init_index);
    let mut params = ModelParams::init(start.embedding.clone(), config.d1, start.seq_len, &mut rng)?;
    let mut adam = AdamState::new(&params);
    let mut best: Option<(usize, f64, ModelParams<f32>)> = None;
    let mut history = Vec::with_capacity(config.max_epochs);
    for epoch in 1..=config.max_epochs {
        let train_loss = train_epoch(&mut params, &mut adam, train, config, member, epoch as u64)?;
        let validation_mse = evaluate_samples(&params, val)?.mse;
        let record = EpochRecord {
            epoch,
            train_loss,
            validation_mse,
        };
        on_epoch(&record);
        history.push(record);
        if best.as_ref().is_none_or(|(_, b, _)| validation_mse < *b) {
            best = Some((epoch, validation_mse, params.clone()));
        }
    }
    let (best_epoch, validation_mse, params) = best.expect("max_epochs is positive");
    Ok(FoldOutcome {
        model: TrainedModel {
            params,
            vocab: start.vocab.clone(),
            init_seed: config.seed,
            best_epoch,
            validation_mse,
        },
        history,
    })
}
