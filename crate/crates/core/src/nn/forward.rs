//! Forward passes: embedding lookup → biGRU → self-attention → softmax head.
//!
//! GRU convention (frozen in the serialized weights):
//!
//! ```text
//! z  = σ(W_z x + U_z h + b_z)
//! r  = σ(W_r x + U_r h + b_r)
//! h~ = tanh(W_h x + U_h (r ⊙ h) + b_h)
//! h' = (1 − z) ⊙ h + z ⊙ h~
//! ```
//!
//! Attention scores are `u_n = v · tanh(h_n W)` with `h_n` a row vector, so
//! `W` is stored input-major. Positions past the true length are excluded
//! from both recurrences and from the attention softmax.

use rand::Rng;

use super::params::{AttentionParams, GruDirection, GruParams, ModelParams, OutputParams, NUM_LEVELS};
use super::tensor::{dot, log_sum_exp, matvec, matvec_t_acc, sigmoid, softmax, sum, Scalar, Tensor};
use crate::error::{Error, Result};
use crate::text::EncodedTweet;

/// Inverted-dropout rates for the three dropout sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutRates {
    /// On embedding lookups.
    pub embedding: f64,
    /// On biGRU states.
    pub encoder: f64,
    /// On the attention-pooled sentence vector.
    pub attention: f64,
}

impl DropoutRates {
    pub const NONE: Self = Self {
        embedding: 0.0,
        encoder: 0.0,
        attention: 0.0,
    };
}

impl Default for DropoutRates {
    fn default() -> Self {
        Self {
            embedding: 0.2,
            encoder: 0.3,
            attention: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Gate activations of one GRU step, kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct GruStep<T> {
    pub h_prev: Vec<T>,
    pub z: Vec<T>,
    pub r: Vec<T>,
    pub candidate: Vec<T>,
}

/// Intermediate activations of a training-mode forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache<T> {
    pub seq_len: usize,
    pub len: usize,
    /// Vocabulary indices of the real tokens.
    pub indices: Vec<usize>,
    /// Dropout scale per embedding entry (`len × d0`).
    pub embedding_mask: Vec<T>,
    /// GRU inputs after dropout (`seq_len × d0`, padded rows zero).
    pub x: Tensor<T>,
    pub forward_steps: Vec<GruStep<T>>,
    /// Indexed by position; step `n` consumed the state from `n + 1`.
    pub backward_steps: Vec<GruStep<T>>,
    /// Dropout scale per biGRU state entry (`len × hidden`).
    pub encoder_mask: Vec<T>,
    /// biGRU states after dropout (`seq_len × hidden`).
    pub h: Tensor<T>,
    /// `tanh(h_n W)` for real positions (`len × hidden`).
    pub activations: Tensor<T>,
    pub alpha: Vec<T>,
    pub sentence: Vec<T>,
    pub attention_mask: Vec<T>,
    pub sentence_dropped: Vec<T>,
    pub logits: Vec<T>,
    pub p: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass<T> {
    pub p: Vec<T>,
    pub logits: Vec<T>,
    pub alpha: Vec<T>,
    /// Present only for [`Mode::Train`].
    pub cache: Option<ForwardCache<T>>,
}

fn gru_step<T: Scalar>(x: &[T], h_prev: &[T], dir: &GruDirection<T>) -> (Vec<T>, GruStep<T>) {
    let d1 = h_prev.len();
    let mut z = vec![T::zero(); d1];
    let mut r = vec![T::zero(); d1];
    let mut c = vec![T::zero(); d1];
    let mut tmp = vec![T::zero(); d1];

    matvec(&dir.w_z, x, &mut z);
    matvec(&dir.u_z, h_prev, &mut tmp);
    for i in 0..d1 {
        z[i] = sigmoid(z[i] + tmp[i] + dir.b_z.data()[i]);
    }
    matvec(&dir.w_r, x, &mut r);
    matvec(&dir.u_r, h_prev, &mut tmp);
    for i in 0..d1 {
        r[i] = sigmoid(r[i] + tmp[i] + dir.b_r.data()[i]);
    }
    let gated: Vec<T> = r.iter().zip(h_prev).map(|(&a, &b)| a * b).collect();
    matvec(&dir.w_h, x, &mut c);
    matvec(&dir.u_h, &gated, &mut tmp);
    for i in 0..d1 {
        c[i] = (c[i] + tmp[i] + dir.b_h.data()[i]).tanh();
    }
    let h: Vec<T> = (0..d1).map(|i| (T::one() - z[i]) * h_prev[i] + z[i] * c[i]).collect();
    (
        h,
        GruStep {
            h_prev: h_prev.to_vec(),
            z,
            r,
            candidate: c,
        },
    )
}

/// One GRU step.
pub fn gru_cell<T: Scalar>(x: &[T], h_prev: &[T], dir: &GruDirection<T>) -> Result<Vec<T>> {
    if x.len() != dir.input_dim() {
        return Err(Error::shape("gru input", &[dir.input_dim()], &[x.len()]));
    }
    if h_prev.len() != dir.hidden_dim() {
        return Err(Error::shape("gru state", &[dir.hidden_dim()], &[h_prev.len()]));
    }
    dir.check(dir.input_dim(), dir.hidden_dim())?;
    Ok(gru_step(x, h_prev, dir).0)
}

/// Number of leading ones; errors if any one follows a zero.
pub(crate) fn prefix_length(mask: &[u8]) -> Result<usize> {
    let len = mask.iter().take_while(|&&m| m != 0).count();
    if mask[len..].iter().any(|&m| m != 0) {
        return Err(Error::InvalidMask);
    }
    Ok(len)
}

type BiGruOutput<T> = (Tensor<T>, Vec<GruStep<T>>, Vec<GruStep<T>>);

fn run_bigru<T: Scalar>(x: &Tensor<T>, len: usize, gru: &GruParams<T>) -> BiGruOutput<T> {
    let d1 = gru.forward.hidden_dim();
    let mut h = Tensor::zeros(&[x.rows(), 2 * d1]);
    let mut forward_steps = Vec::with_capacity(len);
    let mut state = vec![T::zero(); d1];
    for n in 0..len {
        let (next, step) = gru_step(x.row(n), &state, &gru.forward);
        h.row_mut(n)[..d1].copy_from_slice(&next);
        forward_steps.push(step);
        state = next;
    }
    let mut backward_steps = Vec::with_capacity(len);
    let mut state = vec![T::zero(); d1];
    for n in (0..len).rev() {
        let (next, step) = gru_step(x.row(n), &state, &gru.backward);
        h.row_mut(n)[d1..].copy_from_slice(&next);
        backward_steps.push(step);
        state = next;
    }
    backward_steps.reverse();
    (h, forward_steps, backward_steps)
}

/// Bidirectional GRU over the unmasked prefix; row `n` is `[→h_n ∥ ←h_n]`
/// and padded rows are zero.
pub fn bigru_forward<T: Scalar>(x: &Tensor<T>, mask: &[u8], gru: &GruParams<T>) -> Result<Tensor<T>> {
    let d0 = gru.forward.input_dim();
    let d1 = gru.forward.hidden_dim();
    gru.forward.check(d0, d1)?;
    gru.backward.check(d0, d1)?;
    x.check_shape("biGRU input", &[mask.len(), d0])?;
    let len = prefix_length(mask)?;
    Ok(run_bigru(x, len, gru).0)
}

fn run_attention<T: Scalar>(h: &Tensor<T>, len: usize, attn: &AttentionParams<T>) -> (Vec<T>, Vec<T>, Tensor<T>) {
    let hidden = h.cols();
    let mut activations = Tensor::zeros(&[len, hidden]);
    let mut scores = Vec::with_capacity(len);
    for n in 0..len {
        let a = activations.row_mut(n);
        matvec_t_acc(&attn.w, h.row(n), a);
        a.iter_mut().for_each(|x| *x = x.tanh());
        scores.push(dot(a, attn.v.data()));
    }
    let mut alpha = softmax(&scores);
    alpha.resize(h.rows(), T::zero());
    let mut sentence = vec![T::zero(); hidden];
    for n in 0..len {
        for (s, &x) in sentence.iter_mut().zip(h.row(n)) {
            *s += alpha[n] * x;
        }
    }
    (alpha, sentence, activations)
}

/// Masked self-attention pooling. Returns the weights `α` (exactly zero on
/// masked positions) and the pooled vector `s = Hᵀα`.
pub fn attention_forward<T: Scalar>(h: &Tensor<T>, mask: &[u8], attn: &AttentionParams<T>) -> Result<(Vec<T>, Vec<T>)> {
    let hidden = attn.v.len();
    attn.w.check_shape("attention projection", &[hidden, hidden])?;
    h.check_shape("attention input", &[mask.len(), hidden])?;
    let len = prefix_length(mask)?;
    if len == 0 {
        return Err(Error::AllMasked);
    }
    let (alpha, s, _) = run_attention(h, len, attn);
    Ok((alpha, s))
}

fn logits<T: Scalar>(s: &[T], out: &OutputParams<T>) -> Vec<T> {
    let mut l = vec![T::zero(); NUM_LEVELS];
    matvec(&out.w, s, &mut l);
    for (x, &b) in l.iter_mut().zip(out.b.data()) {
        *x += b;
    }
    l
}

/// `softmax(W s + b)`.
pub fn output_forward<T: Scalar>(s: &[T], out: &OutputParams<T>) -> Result<Vec<T>> {
    out.w.check_shape("output projection", &[NUM_LEVELS, s.len()])?;
    out.b.check_shape("output bias", &[NUM_LEVELS])?;
    Ok(softmax(&logits(s, out)))
}

fn dropout_mask<T: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize, rate: f64) -> Vec<T> {
    if rate <= 0.0 {
        return vec![T::one(); n];
    }
    let keep = T::of(1.0 / (1.0 - rate));
    (0..n)
        .map(|_| if rng.random::<f64>() < rate { T::zero() } else { keep })
        .collect()
}

fn apply_mask<T: Scalar>(values: &mut [T], mask: &[T]) {
    for (v, &m) in values.iter_mut().zip(mask) {
        *v *= m;
    }
}

/// Full network. In [`Mode::Infer`] dropout is the identity and no cache is
/// kept; `rng` is only consumed in training mode.
pub fn model_forward<T: Scalar, R: Rng + ?Sized>(
    encoded: &EncodedTweet,
    params: &ModelParams<T>,
    mode: Mode,
    rates: &DropoutRates,
    rng: &mut R,
) -> Result<ForwardPass<T>> {
    let cfg = params.config;
    let (d0, hidden) = (cfg.d0, cfg.hidden());
    if encoded.indices.len() != cfg.seq_len || encoded.mask.len() != cfg.seq_len {
        return Err(Error::shape("encoded tweet", &[cfg.seq_len], &[encoded.indices.len()]));
    }
    let len = prefix_length(&encoded.mask)?;
    if len == 0 {
        return Err(Error::AllMasked);
    }
    let indices = &encoded.indices[..len];
    if let Some(&bad) = indices.iter().find(|&&i| i >= cfg.vocab_size) {
        return Err(Error::shape("token index", &[cfg.vocab_size], &[bad]));
    }
    let train = mode == Mode::Train;

    let mut x = Tensor::zeros(&[cfg.seq_len, d0]);
    for (n, &idx) in indices.iter().enumerate() {
        x.row_mut(n).copy_from_slice(params.embedding.row(idx));
    }
    let embedding_mask = if train {
        let m = dropout_mask(rng, len * d0, rates.embedding);
        apply_mask(&mut x.data_mut()[..len * d0], &m);
        m
    } else {
        Vec::new()
    };

    let (mut h, forward_steps, backward_steps) = run_bigru(&x, len, &params.layers.gru);
    let encoder_mask = if train {
        let m = dropout_mask(rng, len * hidden, rates.encoder);
        apply_mask(&mut h.data_mut()[..len * hidden], &m);
        m
    } else {
        Vec::new()
    };

    let (alpha, sentence, activations) = run_attention(&h, len, &params.layers.attention);
    let (attention_mask, sentence_dropped) = if train {
        let m = dropout_mask(rng, hidden, rates.attention);
        let mut dropped = sentence.clone();
        apply_mask(&mut dropped, &m);
        (m, dropped)
    } else {
        (Vec::new(), sentence.clone())
    };

    let logits = logits(&sentence_dropped, &params.layers.output);
    let p = softmax(&logits);

    let cache = train.then(|| ForwardCache {
        seq_len: cfg.seq_len,
        len,
        indices: indices.to_vec(),
        embedding_mask,
        x,
        forward_steps,
        backward_steps,
        encoder_mask,
        h,
        activations,
        alpha: alpha.clone(),
        sentence,
        attention_mask,
        sentence_dropped,
        logits: logits.clone(),
        p: p.clone(),
    });
    Ok(ForwardPass {
        p,
        logits,
        alpha,
        cache,
    })
}

/// `−Σ q_i ln p_i`.
pub fn cross_entropy<T: Scalar>(p: &[T], q: &[T]) -> Result<T> {
    if let Some(&bad) = p.iter().find(|&&x| !(x > T::zero())) {
        return Err(Error::DomainError(bad.to_f64()));
    }
    Ok(-sum(p.iter().zip(q).map(|(&pi, &qi)| qi * pi.ln())))
}

/// Cross-entropy of `softmax(logits)` against `q`, via log-sum-exp.
pub fn cross_entropy_with_logits<T: Scalar>(logits: &[T], q: &[T]) -> T {
    let lse = log_sum_exp(logits);
    -sum(logits.iter().zip(q).map(|(&l, &qi)| qi * (l - lse)))
}

/// `−Σ q_i ln q_i`, with `0 ln 0 = 0`.
pub fn entropy<T: Scalar>(q: &[T]) -> T {
    -sum(q.iter().filter(|&&x| x > T::zero()).map(|&x| x * x.ln()))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::nn::params::Layers;

    fn random_direction(d0: usize, d1: usize, rng: &mut ChaCha8Rng) -> GruDirection<f64> {
        let mut dir = GruDirection::zeros(d0, d1);
        for t in [
            &mut dir.w_z,
            &mut dir.w_r,
            &mut dir.w_h,
            &mut dir.u_z,
            &mut dir.u_r,
            &mut dir.u_h,
            &mut dir.b_z,
            &mut dir.b_r,
            &mut dir.b_h,
        ] {
            t.data_mut().iter_mut().for_each(|x| *x = rng.random_range(-0.8..0.8));
        }
        dir
    }

    /// Scalar-loop GRU written directly from the gate equations.
    fn oracle_cell(x: &[f64], h: &[f64], dir: &GruDirection<f64>) -> Vec<f64> {
        let d1 = h.len();
        let at = |t: &Tensor<f64>, i: usize, j: usize| t.data()[i * t.cols() + j];
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut z = vec![0.0; d1];
        let mut r = vec![0.0; d1];
        for i in 0..d1 {
            let mut az = dir.b_z.data()[i];
            let mut ar = dir.b_r.data()[i];
            for j in 0..x.len() {
                az += at(&dir.w_z, i, j) * x[j];
                ar += at(&dir.w_r, i, j) * x[j];
            }
            for j in 0..d1 {
                az += at(&dir.u_z, i, j) * h[j];
                ar += at(&dir.u_r, i, j) * h[j];
            }
            z[i] = sig(az);
            r[i] = sig(ar);
        }
        let mut out = vec![0.0; d1];
        for i in 0..d1 {
            let mut ac = dir.b_h.data()[i];
            for j in 0..x.len() {
                ac += at(&dir.w_h, i, j) * x[j];
            }
            for j in 0..d1 {
                ac += at(&dir.u_h, i, j) * r[j] * h[j];
            }
            out[i] = (1.0 - z[i]) * h[i] + z[i] * ac.tanh();
        }
        out
    }

    #[test]
    fn zero_cell_is_zero() {
        let dir = GruDirection::<f64>::zeros(3, 2);
        assert_eq!(gru_cell(&[1.0, -2.0, 0.5], &[0.0, 0.0], &dir).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn zero_weights_halve_the_state() {
        let dir = GruDirection::<f64>::zeros(3, 2);
        let h = gru_cell(&[1.0, -2.0, 0.5], &[0.4, -1.0], &dir).unwrap();
        assert_eq!(h, [0.2, -0.5]);
    }

    #[test]
    fn cell_matches_scalar_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let dir = random_direction(5, 4, &mut rng);
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let h: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let got = gru_cell(&x, &h, &dir).unwrap();
            for (a, b) in got.iter().zip(oracle_cell(&x, &h, &dir)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cell_rejects_bad_shapes() {
        let dir = GruDirection::<f64>::zeros(3, 2);
        assert!(matches!(
            gru_cell(&[1.0], &[0.0, 0.0], &dir),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(matches!(
            gru_cell(&[1.0; 3], &[0.0], &dir),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn bigru_matches_two_unidirectional_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (d0, d1, n) = (4, 3, 5);
        let gru = GruParams {
            forward: random_direction(d0, d1, &mut rng),
            backward: random_direction(d0, d1, &mut rng),
        };
        let x = Tensor::from_vec(&[n, d0], (0..n * d0).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let mask = [1, 1, 1, 0, 0];
        let h = bigru_forward(&x, &mask, &gru).unwrap();
        let mut state = vec![0.0; d1];
        let mut fwd = Vec::new();
        for t in 0..3 {
            state = oracle_cell(x.row(t), &state, &gru.forward);
            fwd.push(state.clone());
        }
        let mut state = vec![0.0; d1];
        let mut bwd = vec![Vec::new(); 3];
        for t in (0..3).rev() {
            state = oracle_cell(x.row(t), &state, &gru.backward);
            bwd[t] = state.clone();
        }
        for t in 0..3 {
            let want: Vec<f64> = fwd[t].iter().chain(&bwd[t]).copied().collect();
            for (a, b) in h.row(t).iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(h.row(3).iter().chain(h.row(4)).all(|&v| v == 0.0));
    }

    #[test]
    fn single_token_directions_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dir = random_direction(3, 2, &mut rng);
        let gru = GruParams {
            forward: dir.clone(),
            backward: dir,
        };
        let x = Tensor::from_vec(&[2, 3], vec![0.3, -0.2, 0.9, 0.0, 0.0, 0.0]).unwrap();
        let h = bigru_forward(&x, &[1, 0], &gru).unwrap();
        assert_eq!(h.row(0)[..2], h.row(0)[2..]);
    }

    #[test]
    fn zero_gru_gives_zero_states() {
        let gru = GruParams {
            forward: GruDirection::<f64>::zeros(3, 2),
            backward: GruDirection::zeros(3, 2),
        };
        let x = Tensor::from_vec(&[3, 3], (0..9).map(|i| i as f64).collect()).unwrap();
        let h = bigru_forward(&x, &[1, 1, 1], &gru).unwrap();
        assert!(h.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn non_prefix_mask_is_rejected() {
        let gru = GruParams {
            forward: GruDirection::<f64>::zeros(1, 1),
            backward: GruDirection::zeros(1, 1),
        };
        let x = Tensor::zeros(&[3, 1]);
        assert!(matches!(bigru_forward(&x, &[1, 0, 1], &gru), Err(Error::InvalidMask)));
    }

    fn random_attention(hidden: usize, rng: &mut ChaCha8Rng) -> AttentionParams<f64> {
        let mut w = Tensor::zeros(&[hidden, hidden]);
        let mut v = Tensor::zeros(&[hidden]);
        w.data_mut().iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
        v.data_mut().iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
        AttentionParams { w, v }
    }

    #[test]
    fn identical_rows_get_uniform_attention() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let attn = random_attention(4, &mut rng);
        let row = [0.3, -0.1, 0.7, 0.2];
        let mut h = Tensor::zeros(&[5, 4]);
        for n in 0..3 {
            h.row_mut(n).copy_from_slice(&row);
        }
        let (alpha, s) = attention_forward(&h, &[1, 1, 1, 0, 0], &attn).unwrap();
        for &a in &alpha[..3] {
            assert!((a - 1.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(&alpha[3..], &[0.0, 0.0]);
        for (a, b) in s.iter().zip(row) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_position_attention_copies_the_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let attn = random_attention(2, &mut rng);
        let h = Tensor::from_vec(&[3, 2], vec![0.5, -0.25, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let (alpha, s) = attention_forward(&h, &[1, 0, 0], &attn).unwrap();
        assert_eq!(alpha, [1.0, 0.0, 0.0]);
        assert_eq!(s, [0.5, -0.25]);
    }

    #[test]
    fn attention_matches_scalar_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (n, hidden, len) = (6, 4, 4);
        let attn = random_attention(hidden, &mut rng);
        let mut h = Tensor::zeros(&[n, hidden]);
        for t in 0..len {
            h.row_mut(t).iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
        }
        let mask = [1, 1, 1, 1, 0, 0];
        let (alpha, s) = attention_forward(&h, &mask, &attn).unwrap();
        let at = |t: &Tensor<f64>, i: usize, j: usize| t.data()[i * t.cols() + j];
        let scores: Vec<f64> = (0..len)
            .map(|t| {
                (0..hidden)
                    .map(|j| {
                        let pre: f64 = (0..hidden).map(|i| at(&h, t, i) * at(&attn.w, i, j)).sum();
                        pre.tanh() * attn.v.data()[j]
                    })
                    .sum()
            })
            .collect();
        let z: f64 = scores.iter().map(|u| u.exp()).sum();
        for t in 0..len {
            assert!((alpha[t] - scores[t].exp() / z).abs() < 1e-12);
        }
        for j in 0..hidden {
            let want: f64 = (0..len).map(|t| alpha[t] * at(&h, t, j)).sum();
            assert!((s[j] - want).abs() < 1e-12);
        }
        assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_masked_is_an_error() {
        let attn = AttentionParams {
            w: Tensor::<f64>::zeros(&[2, 2]),
            v: Tensor::zeros(&[2]),
        };
        let h = Tensor::zeros(&[2, 2]);
        assert!(matches!(attention_forward(&h, &[0, 0], &attn), Err(Error::AllMasked)));
    }

    #[test]
    fn output_head_cases() {
        let mut out = OutputParams {
            w: Tensor::<f64>::zeros(&[4, 3]),
            b: Tensor::zeros(&[4]),
        };
        let p = output_forward(&[0.3, 0.1, -2.0], &out).unwrap();
        assert!(p.iter().all(|&x| (x - 0.25).abs() < 1e-15));

        out.b = Tensor::from_vec(&[4], (1..=4).map(|k| (k as f64).ln()).collect()).unwrap();
        let p = output_forward(&[0.3, 0.1, -2.0], &out).unwrap();
        for (a, b) in p.iter().zip([0.1, 0.2, 0.3, 0.4]) {
            assert!((a - b).abs() < 1e-12);
        }

        let shifted = OutputParams {
            w: out.w.clone(),
            b: Tensor::from_vec(&[4], out.b.data().iter().map(|x| x + 7.5).collect()).unwrap(),
        };
        let q = output_forward(&[0.3, 0.1, -2.0], &shifted).unwrap();
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn small_model(seed: u64) -> ModelParams<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut emb = Tensor::zeros(&[10, 4]);
        emb.data_mut().iter_mut().for_each(|x| *x = rng.random_range(-0.5..0.5));
        ModelParams::init(emb, 3, 5, &mut rng).unwrap()
    }

    fn tweet(len: usize, n: usize) -> EncodedTweet {
        let mut indices = vec![0; n];
        let mut mask = vec![0; n];
        for i in 0..len {
            indices[i] = 2 + i;
            mask[i] = 1;
        }
        EncodedTweet {
            indices,
            mask,
            true_length: len,
        }
    }

    #[test]
    fn zero_layers_predict_softmax_of_bias() {
        let mut params = small_model(1);
        params.layers = Layers::zeros(4, 3);
        params.layers.output.b = Tensor::from_vec(&[4], vec![0.5, -1.0, 2.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = model_forward(&tweet(3, 5), &params, Mode::Infer, &DropoutRates::default(), &mut rng).unwrap();
        let want = softmax(&[0.5, -1.0, 2.0, 0.0]);
        for (a, b) in out.p.iter().zip(&want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(out.cache.is_none());
    }

    #[test]
    fn train_without_dropout_equals_infer() {
        let params = small_model(2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = tweet(4, 5);
        let a = model_forward(&t, &params, Mode::Train, &DropoutRates::NONE, &mut rng).unwrap();
        let b = model_forward(&t, &params, Mode::Infer, &DropoutRates::default(), &mut rng).unwrap();
        assert_eq!(a.p, b.p);
        assert_eq!(a.alpha, b.alpha);
        assert!(a.cache.is_some());
    }

    #[test]
    fn seeded_training_forward_is_deterministic() {
        let params = small_model(3);
        let t = tweet(5, 5);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            model_forward(&t, &params, Mode::Train, &DropoutRates::default(), &mut rng).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn wrong_length_is_rejected() {
        let params = small_model(4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = model_forward(&tweet(2, 3), &params, Mode::Infer, &DropoutRates::NONE, &mut rng);
        assert!(matches!(r, Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn cross_entropy_cases() {
        let u = [0.25f64; 4];
        assert!((cross_entropy(&u, &u).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert!((cross_entropy(&u, &[0.4, 0.2, 0.2, 0.2]).unwrap() - 4f64.ln()).abs() < 1e-12);
        let near = [1.0 - 3e-12, 1e-12, 1e-12, 1e-12];
        assert!(cross_entropy(&near, &[1.0, 0.0, 0.0, 0.0]).unwrap() < 1e-11);
        assert!(matches!(
            cross_entropy(&[1.0, 0.0, 0.0, 0.0], &u),
            Err(Error::DomainError(_))
        ));
        let logits = [0.3f64, -1.2, 2.0, 0.1];
        let p = softmax(&logits);
        let q = [0.2, 0.2, 0.4, 0.2];
        assert!((cross_entropy_with_logits(&logits, &q) - cross_entropy(&p, &q).unwrap()).abs() < 1e-12);
        assert!((entropy(&[1.0, 0.0, 0.0, 0.0f64])).abs() < 1e-15);
    }
}
