use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{sum, Scalar, Tensor};
use crate::error::{Error, Result};
use crate::text::PAD_INDEX;

/// Number of click-baiting levels predicted by the output head.
pub const NUM_LEVELS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    /// Word embedding width.
    pub d0: usize,
    /// Hidden width of each GRU direction.
    pub d1: usize,
    /// Fixed input length.
    pub seq_len: usize,
}

impl ModelConfig {
    /// Width of a biGRU state, `2 * d1`.
    pub fn hidden(&self) -> usize {
        2 * self.d1
    }
}

/// Weights of one GRU direction. `w_*` act on the input, `u_*` on the
/// previous state.
#[derive(Debug, Clone, PartialEq)]
pub struct GruDirection<T> {
    pub w_z: Tensor<T>,
    pub w_r: Tensor<T>,
    pub w_h: Tensor<T>,
    pub u_z: Tensor<T>,
    pub u_r: Tensor<T>,
    pub u_h: Tensor<T>,
    pub b_z: Tensor<T>,
    pub b_r: Tensor<T>,
    pub b_h: Tensor<T>,
}

impl<T: Scalar> GruDirection<T> {
    pub fn zeros(d0: usize, d1: usize) -> Self {
        Self {
            w_z: Tensor::zeros(&[d1, d0]),
            w_r: Tensor::zeros(&[d1, d0]),
            w_h: Tensor::zeros(&[d1, d0]),
            u_z: Tensor::zeros(&[d1, d1]),
            u_r: Tensor::zeros(&[d1, d1]),
            u_h: Tensor::zeros(&[d1, d1]),
            b_z: Tensor::zeros(&[d1]),
            b_r: Tensor::zeros(&[d1]),
            b_h: Tensor::zeros(&[d1]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_z.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_z.rows()
    }

    fn tensors(&self) -> [&Tensor<T>; 9] {
        [
            &self.w_z, &self.w_r, &self.w_h, &self.u_z, &self.u_r, &self.u_h, &self.b_z, &self.b_r, &self.b_h,
        ]
    }

    fn tensors_mut(&mut self) -> [&mut Tensor<T>; 9] {
        [
            &mut self.w_z,
            &mut self.w_r,
            &mut self.w_h,
            &mut self.u_z,
            &mut self.u_r,
            &mut self.u_h,
            &mut self.b_z,
            &mut self.b_r,
            &mut self.b_h,
        ]
    }

    pub(crate) fn check(&self, d0: usize, d1: usize) -> Result<()> {
        for (t, shape) in self.tensors().into_iter().zip(gru_shapes(d0, d1)) {
            t.check_shape("gru parameters", &shape)?;
        }
        Ok(())
    }
}

fn gru_shapes(d0: usize, d1: usize) -> [Vec<usize>; 9] {
    [
        vec![d1, d0],
        vec![d1, d0],
        vec![d1, d0],
        vec![d1, d1],
        vec![d1, d1],
        vec![d1, d1],
        vec![d1],
        vec![d1],
        vec![d1],
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruParams<T> {
    pub forward: GruDirection<T>,
    pub backward: GruDirection<T>,
}

/// Token-scoring projection `W_H` (hidden × hidden) and context vector `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams<T> {
    pub w: Tensor<T>,
    pub v: Tensor<T>,
}

/// Softmax head: `w` is levels × hidden, `b` has one entry per level.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputParams<T> {
    pub w: Tensor<T>,
    pub b: Tensor<T>,
}

/// Every layer after the embedding lookup. Shared by parameters and
/// gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Layers<T> {
    pub gru: GruParams<T>,
    pub attention: AttentionParams<T>,
    pub output: OutputParams<T>,
}

pub const LAYER_TENSOR_NAMES: [&str; 22] = [
    "gru.forward.w_z",
    "gru.forward.w_r",
    "gru.forward.w_h",
    "gru.forward.u_z",
    "gru.forward.u_r",
    "gru.forward.u_h",
    "gru.forward.b_z",
    "gru.forward.b_r",
    "gru.forward.b_h",
    "gru.backward.w_z",
    "gru.backward.w_r",
    "gru.backward.w_h",
    "gru.backward.u_z",
    "gru.backward.u_r",
    "gru.backward.u_h",
    "gru.backward.b_z",
    "gru.backward.b_r",
    "gru.backward.b_h",
    "attention.w",
    "attention.v",
    "output.w",
    "output.b",
];

pub const EMBEDDING_TENSOR_NAME: &str = "embedding";

impl<T: Scalar> Layers<T> {
    pub fn zeros(d0: usize, d1: usize) -> Self {
        let hidden = 2 * d1;
        Self {
            gru: GruParams {
                forward: GruDirection::zeros(d0, d1),
                backward: GruDirection::zeros(d0, d1),
            },
            attention: AttentionParams {
                w: Tensor::zeros(&[hidden, hidden]),
                v: Tensor::zeros(&[hidden]),
            },
            output: OutputParams {
                w: Tensor::zeros(&[NUM_LEVELS, hidden]),
                b: Tensor::zeros(&[NUM_LEVELS]),
            },
        }
    }

    /// Tensors in canonical order, matching [`LAYER_TENSOR_NAMES`].
    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        let mut out: Vec<&Tensor<T>> = Vec::with_capacity(22);
        out.extend(self.gru.forward.tensors());
        out.extend(self.gru.backward.tensors());
        out.extend([&self.attention.w, &self.attention.v, &self.output.w, &self.output.b]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out: Vec<&mut Tensor<T>> = Vec::with_capacity(22);
        out.extend(self.gru.forward.tensors_mut());
        out.extend(self.gru.backward.tensors_mut());
        out.extend([
            &mut self.attention.w,
            &mut self.attention.v,
            &mut self.output.w,
            &mut self.output.b,
        ]);
        out
    }

    pub fn shapes(d0: usize, d1: usize) -> Vec<Vec<usize>> {
        let hidden = 2 * d1;
        let mut shapes = Vec::with_capacity(22);
        shapes.extend(gru_shapes(d0, d1));
        shapes.extend(gru_shapes(d0, d1));
        shapes.extend([
            vec![hidden, hidden],
            vec![hidden],
            vec![NUM_LEVELS, hidden],
            vec![NUM_LEVELS],
        ]);
        shapes
    }

    pub fn cast<U: Scalar>(&self) -> Layers<U> {
        let mut out = Layers::<U>::zeros(self.gru.forward.input_dim(), self.gru.forward.hidden_dim());
        for (dst, src) in out.tensors_mut().into_iter().zip(self.tensors()) {
            *dst = src.cast();
        }
        out
    }

    pub(crate) fn check(&self, d0: usize, d1: usize) -> Result<()> {
        for (t, shape) in self.tensors().into_iter().zip(Self::shapes(d0, d1)) {
            t.check_shape("layer parameters", &shape)?;
        }
        Ok(())
    }
}

/// All trainable tensors of the network plus the dimensions they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub config: ModelConfig,
    /// Vocabulary-size × d0; row [`PAD_INDEX`] is kept at zero.
    pub embedding: Tensor<T>,
    pub layers: Layers<T>,
}

impl<T: Scalar> ModelParams<T> {
    /// Wraps a prepared embedding matrix and initializes every other weight
    /// uniformly in `±sqrt(6 / (fan_in + fan_out))`; biases start at zero.
    pub fn init<R: Rng>(embedding: Tensor<T>, d1: usize, seq_len: usize, rng: &mut R) -> Result<Self> {
        if embedding.shape().len() != 2 {
            return Err(Error::shape("embedding", &[0, 0], embedding.shape()));
        }
        let config = ModelConfig {
            vocab_size: embedding.rows(),
            d0: embedding.cols(),
            d1,
            seq_len,
        };
        let (d0, hidden) = (config.d0, config.hidden());
        let mut layers = Layers::zeros(d0, d1);
        for dir in [&mut layers.gru.forward, &mut layers.gru.backward] {
            for w in [&mut dir.w_z, &mut dir.w_r, &mut dir.w_h] {
                fill_scaled_uniform(w, d0, d1, rng);
            }
            for u in [&mut dir.u_z, &mut dir.u_r, &mut dir.u_h] {
                fill_scaled_uniform(u, d1, d1, rng);
            }
        }
        fill_scaled_uniform(&mut layers.attention.w, hidden, hidden, rng);
        fill_scaled_uniform(&mut layers.attention.v, hidden, 1, rng);
        fill_scaled_uniform(&mut layers.output.w, hidden, NUM_LEVELS, rng);
        let mut params = Self {
            config,
            embedding,
            layers,
        };
        params.zero_pad_row();
        Ok(params)
    }

    pub fn zeros(config: ModelConfig) -> Self {
        Self {
            config,
            embedding: Tensor::zeros(&[config.vocab_size, config.d0]),
            layers: Layers::zeros(config.d0, config.d1),
        }
    }

    pub fn zero_pad_row(&mut self) {
        if self.embedding.rows() > PAD_INDEX {
            self.embedding.row_mut(PAD_INDEX).fill(T::zero());
        }
    }

    pub fn check(&self) -> Result<()> {
        let c = self.config;
        self.embedding.check_shape("embedding", &[c.vocab_size, c.d0])?;
        self.layers.check(c.d0, c.d1)
    }

    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams {
            config: self.config,
            embedding: self.embedding.cast(),
            layers: self.layers.cast(),
        }
    }

    /// Named tensors in serialization order: the embedding, then the layers.
    pub fn named_tensors(&self) -> Vec<(&'static str, &Tensor<T>)> {
        std::iter::once((EMBEDDING_TENSOR_NAME, &self.embedding))
            .chain(LAYER_TENSOR_NAMES.into_iter().zip(self.layers.tensors()))
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.embedding.all_finite() && self.layers.tensors().iter().all(|t| t.all_finite())
    }
}

fn fill_scaled_uniform<T: Scalar, R: Rng>(t: &mut Tensor<T>, fan_in: usize, fan_out: usize, rng: &mut R) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for x in t.data_mut() {
        *x = T::of(rng.random_range(-limit..=limit));
    }
}

/// Gradient of the loss with respect to [`ModelParams`]. Embedding rows are
/// stored sparsely: only rows touched by the batch appear.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub embedding: BTreeMap<usize, Vec<T>>,
    pub layers: Layers<T>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros(config: &ModelConfig) -> Self {
        Self {
            embedding: BTreeMap::new(),
            layers: Layers::zeros(config.d0, config.d1),
        }
    }

    /// Adds `scale * other` into `self`.
    pub fn add_scaled(&mut self, other: &Gradients<T>, scale: T) {
        for (&row, g) in &other.embedding {
            let dst = self.embedding.entry(row).or_insert_with(|| vec![T::zero(); g.len()]);
            for (d, &x) in dst.iter_mut().zip(g) {
                *d += scale * x;
            }
        }
        for (dst, src) in self.layers.tensors_mut().into_iter().zip(other.layers.tensors()) {
            for (d, &x) in dst.data_mut().iter_mut().zip(src.data()) {
                *d += scale * x;
            }
        }
    }

    pub fn scale(&mut self, factor: T) {
        for row in self.embedding.values_mut() {
            row.iter_mut().for_each(|x| *x *= factor);
        }
        for t in self.layers.tensors_mut() {
            t.data_mut().iter_mut().for_each(|x| *x *= factor);
        }
    }

    /// Global L2 norm over every gradient entry.
    pub fn global_norm(&self) -> T {
        let emb = sum(self.embedding.values().flat_map(|r| r.iter()).map(|&x| x * x));
        let dense = sum(self.layers.tensors().iter().map(|t| t.squared_norm()));
        (emb + dense).sqrt()
    }

    /// Gradient entry for the embedding matrix (zero for untouched rows).
    pub fn embedding_entry(&self, row: usize, col: usize) -> T {
        self.embedding.get(&row).map(|r| r[col]).unwrap_or_else(T::zero)
    }
}
