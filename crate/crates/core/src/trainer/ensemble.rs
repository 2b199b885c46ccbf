use std::fs;
use std::path::Path;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{stream, train_fold, EpochRecord, ModelSeed, Purpose, Sample, TrainConfig};
use crate::dataset::{split_folds, AnnotationDistribution, LabelledTweet};
use crate::embeddings::{build_embedding_matrix, PretrainedVectors};
use crate::error::{Error, Result};
use crate::model::TrainedModel;
use crate::text::{encode, preprocess, Vocabulary, UNK};

pub const ENSEMBLE_FILE: &str = "ensemble.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub dir: String,
    pub best_epoch: usize,
    pub validation_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub members: Vec<MemberSummary>,
    pub config: TrainConfig,
    pub corpus_fingerprint: String,
    pub corpus_size: usize,
    pub seed: u64,
    pub seq_len: usize,
    pub vocab_size: usize,
}

/// Members trained on complementary folds of one partition. They share the
/// vocabulary and sequence length.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub members: Vec<TrainedModel>,
    pub manifest: EnsembleManifest,
}

/// Hex SHA-256 over ids, texts and annotation distributions, in corpus order.
pub fn corpus_fingerprint(corpus: &[LabelledTweet]) -> String {
    let mut h = Sha256::new();
    for t in corpus {
        for field in [t.tweet.id.as_bytes(), t.tweet.post_text.as_bytes()] {
            h.update((field.len() as u64).to_le_bytes());
            h.update(field);
        }
        for x in t.truth.distribution() {
            h.update(x.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

fn member_dir(i: usize) -> String {
    format!("member_{i}")
}

/// Trains one member per fold. `log` sees every epoch of every member;
/// members may train concurrently, so calls can interleave across members.
pub fn train_ensemble(
    corpus: &[LabelledTweet],
    pretrained: &PretrainedVectors,
    config: &TrainConfig,
    log: &(dyn Fn(usize, &EpochRecord) + Sync),
) -> Result<Ensemble> {
    config.validate()?;
    if pretrained.dim() != config.d0 {
        return Err(Error::Config(format!(
            "embedding dimension {} does not match d0 = {}",
            pretrained.dim(),
            config.d0
        )));
    }
    if corpus.len() < config.k_folds {
        return Err(Error::TooFewSamples {
            samples: corpus.len(),
            folds: config.k_folds,
        });
    }

    let tokens: Vec<Vec<String>> = corpus.par_iter().map(|t| preprocess(&t.tweet.post_text)).collect();
    let vocab = Vocabulary::build(&tokens, &pretrained.tokens())?;
    let seq_len = tokens.iter().map(Vec::len).max().unwrap_or(0).max(1);
    let samples: Vec<Sample> = tokens
        .par_iter()
        .zip(corpus)
        .map(|(toks, t)| {
            let encoded = if toks.is_empty() {
                encode(&[UNK], &vocab, seq_len)
            } else {
                encode(toks, &vocab, seq_len)
            };
            Sample::new(encoded, t.truth.distribution())
        })
        .collect();

    let ids: Vec<String> = corpus.iter().map(|t| t.tweet.id.clone()).collect();
    let split = split_folds(&ids, config.k_folds, config.seed)?;
    let position: std::collections::HashMap<&str, usize> =
        ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let pick =
        |ids: &[String]| -> Vec<Sample> { ids.iter().map(|id| samples[position[id.as_str()]].clone()).collect() };

    let members: Vec<TrainedModel> = (0..split.k())
        .into_par_iter()
        .map(|i| {
            let member = i as u64;
            let embedding_seed = stream(config.seed, member, Purpose::Embedding, 0).next_u64();
            let embedding = build_embedding_matrix(&vocab, pretrained, embedding_seed);
            let start = ModelSeed {
                vocab: &vocab,
                embedding: &embedding,
                seq_len,
            };
            let train = pick(&split.training_ids(i));
            let val = pick(&split.folds[i]);
            Ok(train_fold(&train, &val, &start, config, member, |r| log(i, r))?.model)
        })
        .collect::<Result<_>>()?;

    let manifest = EnsembleManifest {
        members: members
            .iter()
            .enumerate()
            .map(|(i, m)| MemberSummary {
                dir: member_dir(i),
                best_epoch: m.best_epoch,
                validation_mse: m.validation_mse,
            })
            .collect(),
        config: config.clone(),
        corpus_fingerprint: corpus_fingerprint(corpus),
        corpus_size: corpus.len(),
        seed: config.seed,
        seq_len,
        vocab_size: vocab.len(),
    };
    Ok(Ensemble { members, manifest })
}

/// Elementwise arithmetic mean.
pub fn mean_distribution(ds: &[AnnotationDistribution]) -> AnnotationDistribution {
    let mut out = [0.0; 4];
    for d in ds {
        for (o, x) in out.iter_mut().zip(d) {
            *o += x;
        }
    }
    out.map(|x| x / ds.len() as f64)
}

/// Mean of the members' inference-mode distributions.
pub fn predict_distribution(ensemble: &Ensemble, text: &str) -> Result<AnnotationDistribution> {
    Ok(ensemble.predict_with_attention(text)?.distribution)
}

/// Ensemble output for one tweet.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePrediction {
    pub distribution: AnnotationDistribution,
    /// Tokens at the unmasked positions.
    pub tokens: Vec<String>,
    /// Member-averaged attention over `tokens`.
    pub alpha: Vec<f64>,
}

impl Ensemble {
    pub fn vocab(&self) -> &Vocabulary {
        &self.members[0].vocab
    }

    pub fn seq_len(&self) -> usize {
        self.members[0].config().seq_len
    }

    pub fn predict_with_attention(&self, text: &str) -> Result<EnsemblePrediction> {
        let first = self.members.first().ok_or(Error::EmptySet("ensemble"))?;
        let mut tokens = preprocess(text);
        if tokens.is_empty() {
            tokens.push(UNK.to_string());
        }
        let encoded = first.encode(text);
        tokens.truncate(encoded.true_length);
        let mut dists = Vec::with_capacity(self.members.len());
        let mut alpha = vec![0.0; encoded.true_length];
        for m in &self.members {
            let (p, a) = m.predict_encoded(&encoded)?;
            dists.push(p);
            for (d, &x) in alpha.iter_mut().zip(&a) {
                *d += x as f64;
            }
        }
        alpha.iter_mut().for_each(|x| *x /= dists.len() as f64);
        Ok(EnsemblePrediction {
            distribution: mean_distribution(&dists),
            tokens,
            alpha,
        })
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        for (m, s) in self.members.iter().zip(&self.manifest.members) {
            m.save(dir.join(&s.dir))?;
        }
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        fs::write(dir.join(ENSEMBLE_FILE), text)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(ENSEMBLE_FILE);
        let text = fs::read_to_string(&path).map_err(|source| Error::UnreadableFile {
            path: path.clone(),
            source,
        })?;
        let manifest: EnsembleManifest =
            serde_json::from_str(&text).map_err(|e| Error::artifact(&path, e.to_string()))?;
        if manifest.members.is_empty() || manifest.members.len() != manifest.config.k_folds {
            return Err(Error::artifact(
                &path,
                format!(
                    "{} members listed for {} folds",
                    manifest.members.len(),
                    manifest.config.k_folds
                ),
            ));
        }
        let members = manifest
            .members
            .iter()
            .map(|s| {
                if Path::new(&s.dir).components().count() != 1 || s.dir.contains("..") {
                    return Err(Error::artifact(
                        &path,
                        format!("member directory {:?} is not a plain name", s.dir),
                    ));
                }
                TrainedModel::load(dir.join(&s.dir))
            })
            .collect::<Result<Vec<_>>>()?;
        for (m, s) in members.iter().zip(&manifest.members) {
            if m.vocab != members[0].vocab || m.config().seq_len != manifest.seq_len {
                return Err(Error::artifact(
                    dir.join(&s.dir),
                    "member disagrees on vocabulary or sequence length",
                ));
            }
            if m.best_epoch != s.best_epoch {
                return Err(Error::artifact(
                    dir.join(&s.dir),
                    "best epoch differs from the ensemble listing",
                ));
            }
        }
        Ok(Self { members, manifest })
    }
}
