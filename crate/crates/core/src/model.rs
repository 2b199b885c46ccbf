//! Trained models and their on-disk directory format:
//!
//! - `manifest.json`: dimensions, tensor table, provenance
//! - `weights.bin`: little-endian `f32`, row-major, tensors in manifest order
//! - `vocab.txt`: one token per line, line number = index

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::AnnotationDistribution;
use crate::error::{Error, Result};
use crate::nn::params::{Layers, EMBEDDING_TENSOR_NAME, LAYER_TENSOR_NAMES};
use crate::nn::{model_forward, DropoutRates, Mode, ModelConfig, ModelParams, Tensor};
use crate::text::{encode_text, EncodedTweet, Vocabulary, PAD_INDEX, PREPROCESSING_VERSION};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const WEIGHTS_FILE: &str = "weights.bin";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const GRU_CONVENTION: &str = "h = (1 - z) * h_prev + z * tanh(W_h x + U_h (r * h_prev) + b_h)";

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: ModelParams<f32>,
    pub vocab: Vocabulary,
    pub init_seed: u64,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub validation_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub byte_offset: usize,
    pub byte_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub vocab_size: usize,
    pub d0: usize,
    pub d1: usize,
    pub seq_len: usize,
    pub dtype: String,
    pub weights_file: String,
    pub vocab_file: String,
    pub tensors: Vec<TensorEntry>,
    pub preprocessing_version: String,
    pub gru_convention: String,
    pub init_seed: u64,
    pub best_epoch: usize,
    pub validation_mse: f64,
}

impl TrainedModel {
    pub fn config(&self) -> ModelConfig {
        self.params.config
    }

    pub fn encode(&self, raw: &str) -> EncodedTweet {
        encode_text(raw, &self.vocab, self.params.config.seq_len)
    }

    /// Inference-mode distribution and attention weights.
    pub fn predict_encoded(&self, encoded: &EncodedTweet) -> Result<(AnnotationDistribution, Vec<f32>)> {
        let mut unused = ChaCha8Rng::seed_from_u64(0);
        let out = model_forward(encoded, &self.params, Mode::Infer, &DropoutRates::NONE, &mut unused)?;
        let p = [0, 1, 2, 3].map(|k| out.p[k] as f64);
        Ok((p, out.alpha))
    }

    pub fn manifest(&self) -> Manifest {
        let mut offset = 0;
        let tensors = self
            .params
            .named_tensors()
            .into_iter()
            .map(|(name, t)| {
                let byte_length = t.len() * 4;
                let e = TensorEntry {
                    name: name.to_string(),
                    shape: t.shape().to_vec(),
                    byte_offset: offset,
                    byte_length,
                };
                offset += byte_length;
                e
            })
            .collect();
        let c = self.params.config;
        Manifest {
            format_version: FORMAT_VERSION,
            vocab_size: c.vocab_size,
            d0: c.d0,
            d1: c.d1,
            seq_len: c.seq_len,
            dtype: "f32-le".into(),
            weights_file: WEIGHTS_FILE.into(),
            vocab_file: VOCAB_FILE.into(),
            tensors,
            preprocessing_version: PREPROCESSING_VERSION.into(),
            gru_convention: GRU_CONVENTION.into(),
            init_seed: self.init_seed,
            best_epoch: self.best_epoch,
            validation_mse: self.validation_mse,
        }
    }

    pub fn weight_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for (_, t) in self.params.named_tensors() {
            for x in t.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut manifest = serde_json::to_string_pretty(&self.manifest())?;
        manifest.push('\n');
        fs::write(dir.join(MANIFEST_FILE), manifest)?;
        fs::write(dir.join(WEIGHTS_FILE), self.weight_bytes())?;
        let mut vocab = self.vocab.tokens().join("\n");
        vocab.push('\n');
        fs::write(dir.join(VOCAB_FILE), vocab)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read(&path).map_err(|source| Error::UnreadableFile { path, source })
        };
        let manifest_path = dir.join(MANIFEST_FILE);
        let bad = |msg: String| Error::artifact(&manifest_path, msg);
        let manifest: Manifest = serde_json::from_slice(&read(MANIFEST_FILE)?).map_err(|e| bad(e.to_string()))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(bad(format!("unsupported format version {}", manifest.format_version)));
        }
        if manifest.preprocessing_version != PREPROCESSING_VERSION {
            return Err(bad(format!(
                "preprocessing {:?} differs from this build's {PREPROCESSING_VERSION:?}",
                manifest.preprocessing_version
            )));
        }
        if manifest.gru_convention != GRU_CONVENTION {
            return Err(bad("unknown GRU convention".into()));
        }

        let vocab_text = String::from_utf8(read(&manifest.vocab_file)?).map_err(|e| bad(e.to_string()))?;
        let vocab = Vocabulary::from_tokens(vocab_text.lines().map(String::from).collect())?;
        if vocab.len() != manifest.vocab_size {
            return Err(bad(format!(
                "vocabulary has {} tokens, manifest says {}",
                vocab.len(),
                manifest.vocab_size
            )));
        }

        let config = ModelConfig {
            vocab_size: manifest.vocab_size,
            d0: manifest.d0,
            d1: manifest.d1,
            seq_len: manifest.seq_len,
        };
        if config.d0 == 0 || config.d1 == 0 || config.seq_len == 0 {
            return Err(bad("zero dimension".into()));
        }
        let mut expected = vec![(EMBEDDING_TENSOR_NAME, vec![config.vocab_size, config.d0])];
        expected.extend(
            LAYER_TENSOR_NAMES
                .into_iter()
                .zip(Layers::<f32>::shapes(config.d0, config.d1)),
        );
        if manifest.tensors.len() != expected.len() {
            return Err(bad(format!("expected {} tensors", expected.len())));
        }

        let bytes = read(&manifest.weights_file)?;
        let mut params = ModelParams::<f32>::zeros(config);
        let mut offset = 0;
        for (k, (entry, (name, shape))) in manifest.tensors.iter().zip(&expected).enumerate() {
            if entry.name != *name || entry.shape != *shape {
                return Err(bad(format!(
                    "tensor {k} is {} {:?}, expected {name} {shape:?}",
                    entry.name, entry.shape
                )));
            }
            let len: usize = shape.iter().product();
            if entry.byte_offset != offset || entry.byte_length != len * 4 {
                return Err(bad(format!("tensor {name} has an inconsistent byte range")));
            }
            let end = offset + entry.byte_length;
            let chunk = bytes
                .get(offset..end)
                .ok_or_else(|| bad(format!("{} is truncated", manifest.weights_file)))?;
            let data: Vec<f32> = chunk
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            let t = Tensor::from_vec(shape, data)?;
            if k == 0 {
                params.embedding = t;
            } else {
                *params.layers.tensors_mut().swap_remove(k - 1) = t;
            }
            offset = end;
        }
        if offset != bytes.len() {
            return Err(bad(format!("{} has trailing bytes", manifest.weights_file)));
        }
        if !params.all_finite() {
            return Err(bad("non-finite weight".into()));
        }
        if params.embedding.row(PAD_INDEX).iter().any(|&x| x != 0.0) {
            return Err(bad("padding row is not zero".into()));
        }
        Ok(Self {
            params,
            vocab,
            init_seed: manifest.init_seed,
            best_epoch: manifest.best_epoch,
            validation_mse: manifest.validation_mse,
        })
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use rand::Rng;

    use super::*;

    fn model() -> TrainedModel {
        let corpus = vec![vec!["a".to_string(), "b".to_string()]];
        let pre: HashSet<String> = ["a".to_string(), "b".to_string()].into();
        let vocab = Vocabulary::build(&corpus, &pre).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut emb = Tensor::zeros(&[vocab.len(), 3]);
        emb.data_mut().iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
        TrainedModel {
            params: ModelParams::init(emb, 2, 5, &mut rng).unwrap(),
            vocab,
            init_seed: 4,
            best_epoch: 3,
            validation_mse: 0.0625,
        }
    }

    #[test]
    fn save_load_round_trip() {
        let m = model();
        let dir = tempfile::tempdir().unwrap();
        m.save(dir.path()).unwrap();
        let back = TrainedModel::load(dir.path()).unwrap();
        assert_eq!(back, m);
        let bytes = fs::read(dir.path().join(WEIGHTS_FILE)).unwrap();
        let total: usize = m.params.named_tensors().iter().map(|(_, t)| t.len() * 4).sum();
        assert_eq!(bytes.len(), total);
    }

    #[test]
    fn corrupt_artifacts_are_rejected() {
        let m = model();
        let dir = tempfile::tempdir().unwrap();
        m.save(dir.path()).unwrap();
        let w = dir.path().join(WEIGHTS_FILE);
        let mut bytes = fs::read(&w).unwrap();
        bytes.pop();
        fs::write(&w, &bytes).unwrap();
        assert!(matches!(TrainedModel::load(dir.path()), Err(Error::Artifact { .. })));

        m.save(dir.path()).unwrap();
        let v = dir.path().join(VOCAB_FILE);
        fs::write(&v, "<pad>\n<unk>\n").unwrap();
        assert!(matches!(TrainedModel::load(dir.path()), Err(Error::Artifact { .. })));
    }
}
