//! Pretrained word vectors and the initial embedding matrix.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::text::{Vocabulary, PAD_INDEX, UNK_INDEX};

/// Range of the uniform draw for rows without a pretrained vector.
pub const RANDOM_INIT_LIMIT: f32 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct PretrainedVectors {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl PretrainedVectors {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    pub fn tokens(&self) -> HashSet<String> {
        self.vectors.keys().cloned().collect()
    }

    /// Adds a vector unless the token is already present. Returns whether it
    /// was inserted.
    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f32>) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::shape("pretrained vector", &[self.dim], &[vector.len()]));
        }
        let token = token.into();
        if self.vectors.contains_key(&token) {
            return Ok(false);
        }
        self.vectors.insert(token, vector);
        Ok(true)
    }
}

/// Writes `token v1 ... vd` lines sorted by token.
pub fn write_vectors(vectors: &PretrainedVectors, mut out: impl Write) -> Result<()> {
    let mut tokens: Vec<&String> = vectors.vectors.keys().collect();
    tokens.sort();
    for t in tokens {
        write!(out, "{t}")?;
        for x in &vectors.vectors[t] {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads `token v1 ... vd` lines. Blank lines are skipped and the first
/// occurrence of a repeated token wins.
pub fn load_pretrained(path: impl AsRef<Path>, expected_dim: usize) -> Result<PretrainedVectors> {
    load_filtered(path.as_ref(), expected_dim, |_| true)
}

/// Like [`load_pretrained`] but keeps only tokens in `keep`. Every line is
/// still validated.
pub fn load_pretrained_for(
    path: impl AsRef<Path>,
    expected_dim: usize,
    keep: &HashSet<String>,
) -> Result<PretrainedVectors> {
    load_filtered(path.as_ref(), expected_dim, |t| keep.contains(t))
}

fn load_filtered(path: &Path, dim: usize, keep: impl Fn(&str) -> bool) -> Result<PretrainedVectors> {
    let unreadable = |source| Error::UnreadableFile {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(unreadable)?;
    let mut reader = BufReader::new(file);
    let mut out = PretrainedVectors::new(dim);
    let mut line = String::new();
    let mut values = Vec::with_capacity(dim);
    let mut lineno = 0;
    loop {
        line.clear();
        if reader.read_line(&mut line).map_err(unreadable)? == 0 {
            break;
        }
        lineno += 1;
        let mut fields = line.split_ascii_whitespace();
        let Some(token) = fields.next() else {
            continue;
        };
        values.clear();
        for f in fields {
            let v: f32 = f.parse().map_err(|_| Error::MalformedLine {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("not a number: {f:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::MalformedLine {
                    path: path.to_path_buf(),
                    line: lineno,
                    message: format!("non-finite value {f:?}"),
                });
            }
            values.push(v);
        }
        if values.len() != dim {
            return Err(Error::DimensionMismatch {
                path: path.to_path_buf(),
                line: lineno,
                expected: dim,
                found: values.len(),
            });
        }
        if keep(token) {
            out.insert(token, values.clone())?;
        }
    }
    Ok(out)
}

/// `V × d0` matrix: pretrained rows are copied, the PAD row is zero, and
/// every other row (UNK, tags without a vector) is drawn uniformly from
/// `±RANDOM_INIT_LIMIT` in index order.
pub fn build_embedding_matrix(vocab: &Vocabulary, pretrained: &PretrainedVectors, seed: u64) -> Tensor<f32> {
    let d0 = pretrained.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Tensor::zeros(&[vocab.len(), d0]);
    for (i, token) in vocab.tokens().iter().enumerate() {
        if i == PAD_INDEX {
            continue;
        }
        match pretrained.get(token).filter(|_| i != UNK_INDEX) {
            Some(v) => m.row_mut(i).copy_from_slice(v),
            None => m
                .row_mut(i)
                .iter_mut()
                .for_each(|x| *x = rng.random_range(-RANDOM_INIT_LIMIT..=RANDOM_INIT_LIMIT)),
        }
    }
    m
}
