//! Analytic gradients of soft-label cross-entropy through the network.

use super::forward::{ForwardCache, GruStep};
use super::params::{Gradients, GruDirection, ModelParams, NUM_LEVELS};
use super::tensor::{dot, matvec_t_acc, outer_acc, sum, Scalar, Tensor};
use crate::error::{Error, Result};
use crate::text::PAD_INDEX;

/// Backpropagates one GRU step. Accumulates parameter gradients into
/// `grads`, the input gradient into `dx`, and returns the gradient for the
/// previous state.
fn gru_step_backward<T: Scalar>(
    step: &GruStep<T>,
    x: &[T],
    dh: &[T],
    dir: &GruDirection<T>,
    grads: &mut GruDirection<T>,
    dx: &mut [T],
) -> Vec<T> {
    let d1 = dh.len();
    let one = T::one();
    let GruStep {
        h_prev,
        z,
        r,
        candidate: c,
    } = step;

    let mut dh_prev: Vec<T> = (0..d1).map(|i| dh[i] * (one - z[i])).collect();
    let dc_pre: Vec<T> = (0..d1).map(|i| dh[i] * z[i] * (one - c[i] * c[i])).collect();
    let dz_pre: Vec<T> = (0..d1)
        .map(|i| dh[i] * (c[i] - h_prev[i]) * z[i] * (one - z[i]))
        .collect();

    let gated: Vec<T> = (0..d1).map(|i| r[i] * h_prev[i]).collect();
    outer_acc(&mut grads.w_h, &dc_pre, x);
    outer_acc(&mut grads.u_h, &dc_pre, &gated);
    add_into(grads.b_h.data_mut(), &dc_pre);
    matvec_t_acc(&dir.w_h, &dc_pre, dx);

    let mut d_gated = vec![T::zero(); d1];
    matvec_t_acc(&dir.u_h, &dc_pre, &mut d_gated);
    let dr_pre: Vec<T> = (0..d1).map(|i| d_gated[i] * h_prev[i] * r[i] * (one - r[i])).collect();
    for i in 0..d1 {
        dh_prev[i] += d_gated[i] * r[i];
    }

    outer_acc(&mut grads.w_z, &dz_pre, x);
    outer_acc(&mut grads.u_z, &dz_pre, h_prev);
    add_into(grads.b_z.data_mut(), &dz_pre);
    outer_acc(&mut grads.w_r, &dr_pre, x);
    outer_acc(&mut grads.u_r, &dr_pre, h_prev);
    add_into(grads.b_r.data_mut(), &dr_pre);

    matvec_t_acc(&dir.w_z, &dz_pre, dx);
    matvec_t_acc(&dir.w_r, &dr_pre, dx);
    matvec_t_acc(&dir.u_z, &dz_pre, &mut dh_prev);
    matvec_t_acc(&dir.u_r, &dr_pre, &mut dh_prev);
    dh_prev
}

fn add_into<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Gradient of `cross_entropy(p, q)` with respect to every parameter, given
/// the cache of the training-mode forward pass that produced `p`.
pub fn model_backward<T: Scalar>(cache: &ForwardCache<T>, q: &[T], params: &ModelParams<T>) -> Result<Gradients<T>> {
    let cfg = params.config;
    let (d0, d1, hidden) = (cfg.d0, cfg.d1, cfg.hidden());
    let len = cache.len;
    if cache.seq_len != cfg.seq_len
        || cache.x.shape() != [cfg.seq_len, d0]
        || cache.h.shape() != [cfg.seq_len, hidden]
        || cache.forward_steps.len() != len
        || cache.backward_steps.len() != len
        || cache.sentence.len() != hidden
        || cache.indices.iter().any(|&i| i >= cfg.vocab_size)
        || cache.forward_steps.first().is_some_and(|s| s.z.len() != d1)
    {
        return Err(Error::StaleCache);
    }
    if q.len() != NUM_LEVELS {
        return Err(Error::shape("target distribution", &[NUM_LEVELS], &[q.len()]));
    }
    let layers = &params.layers;
    let mut grads = Gradients::zeros(&cfg);

    // softmax + cross-entropy
    let d_logits: Vec<T> = cache.p.iter().zip(q).map(|(&p, &q)| p - q).collect();
    outer_acc(&mut grads.layers.output.w, &d_logits, &cache.sentence_dropped);
    add_into(grads.layers.output.b.data_mut(), &d_logits);
    let mut d_sentence = vec![T::zero(); hidden];
    matvec_t_acc(&layers.output.w, &d_logits, &mut d_sentence);
    for (d, &m) in d_sentence.iter_mut().zip(&cache.attention_mask) {
        *d *= m;
    }

    // attention pooling s = Σ α_n h_n
    let mut dh = Tensor::<T>::zeros(&[len, hidden]);
    let d_alpha: Vec<T> = (0..len).map(|n| dot(cache.h.row(n), &d_sentence)).collect();
    for n in 0..len {
        let a = cache.alpha[n];
        for (d, &s) in dh.row_mut(n).iter_mut().zip(&d_sentence) {
            *d += a * s;
        }
    }
    let weighted = sum((0..len).map(|n| cache.alpha[n] * d_alpha[n]));
    let v = layers.attention.v.data();
    let mut d_pre = vec![T::zero(); hidden];
    for n in 0..len {
        let d_score = cache.alpha[n] * (d_alpha[n] - weighted);
        let act = cache.activations.row(n);
        for (g, &a) in grads.layers.attention.v.data_mut().iter_mut().zip(act) {
            *g += d_score * a;
        }
        for j in 0..hidden {
            d_pre[j] = d_score * v[j] * (T::one() - act[j] * act[j]);
        }
        outer_acc(&mut grads.layers.attention.w, cache.h.row(n), &d_pre);
        let row = dh.row_mut(n);
        for (i, d) in row.iter_mut().enumerate() {
            *d += dot(layers.attention.w.row(i), &d_pre);
        }
    }

    // encoder dropout
    for (d, &m) in dh.data_mut().iter_mut().zip(&cache.encoder_mask) {
        *d *= m;
    }

    // both recurrences
    let mut dx = Tensor::zeros(&[len, d0]);
    let mut carry = vec![T::zero(); d1];
    for n in (0..len).rev() {
        let d_out: Vec<T> = (0..d1).map(|i| dh.row(n)[i] + carry[i]).collect();
        carry = gru_step_backward(
            &cache.forward_steps[n],
            cache.x.row(n),
            &d_out,
            &layers.gru.forward,
            &mut grads.layers.gru.forward,
            dx.row_mut(n),
        );
    }
    let mut carry = vec![T::zero(); d1];
    for n in 0..len {
        let d_out: Vec<T> = (0..d1).map(|i| dh.row(n)[d1 + i] + carry[i]).collect();
        carry = gru_step_backward(
            &cache.backward_steps[n],
            cache.x.row(n),
            &d_out,
            &layers.gru.backward,
            &mut grads.layers.gru.backward,
            dx.row_mut(n),
        );
    }

    // embedding dropout and lookup
    for (n, &idx) in cache.indices.iter().enumerate() {
        if idx == PAD_INDEX {
            continue;
        }
        let mask = &cache.embedding_mask[n * d0..(n + 1) * d0];
        let row = grads.embedding.entry(idx).or_insert_with(|| vec![T::zero(); d0]);
        for ((g, &d), &m) in row.iter_mut().zip(dx.row(n)).zip(mask) {
            *g += d * m;
        }
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::nn::forward::{model_forward, DropoutRates, Mode};
    use crate::text::EncodedTweet;

    fn setup(seed: u64) -> (ModelParams<f64>, EncodedTweet) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut emb = Tensor::zeros(&[12, 5]);
        emb.data_mut().iter_mut().for_each(|x| *x = rng.random_range(-0.5..0.5));
        let params = ModelParams::init(emb, 4, 6, &mut rng).unwrap();
        let t = EncodedTweet {
            indices: vec![3, 7, 3, 0, 0, 0],
            mask: vec![1, 1, 1, 0, 0, 0],
            true_length: 3,
        };
        (params, t)
    }

    #[test]
    fn output_gradient_is_p_minus_q_times_s() {
        let (params, t) = setup(1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let fwd = model_forward(&t, &params, Mode::Train, &DropoutRates::NONE, &mut rng).unwrap();
        let cache = fwd.cache.unwrap();
        let q = [0.4, 0.2, 0.2, 0.2];
        let g = model_backward(&cache, &q, &params).unwrap();
        for k in 0..4 {
            let d = fwd.p[k] - q[k];
            assert!((g.layers.output.b.data()[k] - d).abs() < 1e-15);
            for j in 0..8 {
                let want = d * cache.sentence[j];
                assert!((g.layers.output.w.row(k)[j] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn repeated_evaluations_agree() {
        let (params, t) = setup(2);
        let q = [0.0, 0.6, 0.2, 0.2];
        let grads = || {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let fwd = model_forward(&t, &params, Mode::Train, &DropoutRates::NONE, &mut rng).unwrap();
            model_backward(&fwd.cache.unwrap(), &q, &params).unwrap()
        };
        assert_eq!(grads(), grads());
    }

    #[test]
    fn pad_row_never_receives_gradient() {
        let (params, mut t) = setup(3);
        t.indices[1] = PAD_INDEX;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let fwd = model_forward(&t, &params, Mode::Train, &DropoutRates::default(), &mut rng).unwrap();
        let g = model_backward(&fwd.cache.unwrap(), &[0.25; 4], &params).unwrap();
        assert!(!g.embedding.contains_key(&PAD_INDEX));
        assert_eq!(g.embedding.keys().copied().collect::<Vec<_>>(), [3]);
    }

    #[test]
    fn mismatched_cache_is_stale() {
        let (params, t) = setup(4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cache = model_forward(&t, &params, Mode::Train, &DropoutRates::NONE, &mut rng)
            .unwrap()
            .cache
            .unwrap();
        let mut other = params.clone();
        other.config.seq_len = 9;
        assert!(matches!(
            model_backward(&cache, &[0.25; 4], &other),
            Err(Error::StaleCache)
        ));
    }
}
