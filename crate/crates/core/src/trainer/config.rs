use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::DropoutRates;

/// Training hyperparameters. The file form is flat `key = value` lines using
/// these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub clip_threshold: f64,
    pub max_epochs: usize,
    pub dropout_embedding: f64,
    pub dropout_encoder: f64,
    pub dropout_attention_out: f64,
    pub d0: usize,
    pub d1: usize,
    pub k_folds: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            learning_rate: 0.005,
            clip_threshold: 2.0,
            max_epochs: 20,
            dropout_embedding: 0.2,
            dropout_encoder: 0.3,
            dropout_attention_out: 0.5,
            d0: 100,
            d1: 64,
            k_folds: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Defaults overridden by the keys present in `text`.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::UnreadableFile {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_kv_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("batch_size", self.batch_size as f64),
            ("learning_rate", self.learning_rate),
            ("clip_threshold", self.clip_threshold),
            ("max_epochs", self.max_epochs as f64),
            ("d0", self.d0 as f64),
            ("d1", self.d1 as f64),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, r) in [
            ("dropout_embedding", self.dropout_embedding),
            ("dropout_encoder", self.dropout_encoder),
            ("dropout_attention_out", self.dropout_attention_out),
        ] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::Config(format!("{name} must be in [0, 1), got {r}")));
            }
        }
        if self.k_folds < 2 {
            return Err(Error::Config(format!(
                "k_folds must be at least 2, got {}",
                self.k_folds
            )));
        }
        Ok(())
    }

    pub fn dropout(&self) -> DropoutRates {
        DropoutRates {
            embedding: self.dropout_embedding,
            encoder: self.dropout_encoder,
            attention: self.dropout_attention_out,
        }
    }
}
