//! Central finite-difference validation of [`model_backward`].

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::backward::model_backward;
use super::forward::{cross_entropy_with_logits, model_forward, DropoutRates, Mode};
use super::params::{Gradients, ModelParams, EMBEDDING_TENSOR_NAME, LAYER_TENSOR_NAMES};
use super::tensor::{Scalar, Tensor};
use super::wide::Wide;
use crate::error::Result;
use crate::text::{EncodedTweet, PAD_INDEX};

/// Entries compared per tensor when a tensor is larger than this.
pub const SAMPLES_PER_TENSOR: usize = 200;
pub const TOLERANCE: f64 = 1e-4;
pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_tensor: &'static str,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub entries_checked: usize,
}

/// `|a − b| / max(|a|, |b|, 1e-8)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn loss(params: &ModelParams<Wide>, sample: &EncodedTweet, q: &[Wide]) -> Result<Wide> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let fwd = model_forward(sample, params, Mode::Infer, &DropoutRates::NONE, &mut rng)?;
    Ok(cross_entropy_with_logits(&fwd.logits, q))
}

/// Compares the analytic gradient at `params` against central differences
/// with step `step`, with dropout disabled.
pub fn finite_difference_check(
    params: &ModelParams<f64>,
    sample: &EncodedTweet,
    q: &[f64],
    step: f64,
    seed: u64,
) -> Result<GradCheckReport> {
    finite_difference_check_with(params, sample, q, step, seed, |_| {})
}

/// Like [`finite_difference_check`], with a hook that may alter the analytic
/// gradient before comparison (used for negative controls).
pub fn finite_difference_check_with(
    params: &ModelParams<f64>,
    sample: &EncodedTweet,
    q: &[f64],
    step: f64,
    seed: u64,
    tamper: impl FnOnce(&mut Gradients<f64>),
) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fwd = model_forward(sample, params, Mode::Train, &DropoutRates::NONE, &mut rng)?;
    let mut grads = model_backward(fwd.cache.as_ref().expect("train mode"), q, params)?;
    tamper(&mut grads);

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_tensor: EMBEDDING_TENSOR_NAME,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        entries_checked: 0,
    };
    let mut probe: ModelParams<Wide> = params.cast();
    let q_wide: Vec<Wide> = q.iter().map(|&x| Wide::from_f64(x)).collect();
    let q = &q_wide[..];

    let d0 = params.config.d0;
    let mut emb_entries: Vec<usize> = sample.indices[..sample.true_length]
        .iter()
        .filter(|&&i| i != PAD_INDEX)
        .flat_map(|&row| row * d0..(row + 1) * d0)
        .collect();
    emb_entries.extend(subsample(&params.embedding, &mut rng));
    emb_entries.sort_unstable();
    emb_entries.dedup();
    emb_entries.retain(|&e| e / d0 != PAD_INDEX);
    for &e in &emb_entries {
        let analytic = grads.embedding_entry(e / d0, e % d0);
        let numeric = central_difference(&mut probe, sample, q, step, None, e)?;
        report.record(EMBEDDING_TENSOR_NAME, e, analytic, numeric);
    }

    for (k, name) in LAYER_TENSOR_NAMES.into_iter().enumerate() {
        let entries = subsample(params.layers.tensors()[k], &mut rng);
        for e in entries {
            let analytic = grads.layers.tensors()[k].data()[e];
            let numeric = central_difference(&mut probe, sample, q, step, Some(k), e)?;
            report.record(name, e, analytic, numeric);
        }
    }
    Ok(report)
}

impl GradCheckReport {
    fn record(&mut self, tensor: &'static str, index: usize, analytic: f64, numeric: f64) {
        self.entries_checked += 1;
        let err = relative_error(analytic, numeric);
        if err > self.max_relative_error || self.entries_checked == 1 {
            self.max_relative_error = err;
            self.worst_tensor = tensor;
            self.worst_index = index;
            self.analytic = analytic;
            self.numeric = numeric;
        }
    }
}

fn subsample<R: Rng>(t: &Tensor<f64>, rng: &mut R) -> Vec<usize> {
    if t.len() <= SAMPLES_PER_TENSOR {
        (0..t.len()).collect()
    } else {
        let mut idx = sample(rng, t.len(), SAMPLES_PER_TENSOR).into_vec();
        idx.sort_unstable();
        idx
    }
}

fn central_difference(
    probe: &mut ModelParams<Wide>,
    sample: &EncodedTweet,
    q: &[Wide],
    step: f64,
    layer: Option<usize>,
    index: usize,
) -> Result<f64> {
    fn entry(p: &mut ModelParams<Wide>, layer: Option<usize>, index: usize) -> &mut Wide {
        match layer {
            None => &mut p.embedding.data_mut()[index],
            Some(k) => &mut p.layers.tensors_mut().swap_remove(k).data_mut()[index],
        }
    }
    let original = *entry(probe, layer, index);
    *entry(probe, layer, index) = original + Wide::from_f64(step);
    let plus = loss(probe, sample, q);
    *entry(probe, layer, index) = original - Wide::from_f64(step);
    let minus = loss(probe, sample, q);
    *entry(probe, layer, index) = original;
    Ok(((plus? - minus?) / Wide::from_f64(2.0 * step)).to_f64())
}

/// Dimensions of the models used for gradient checking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TinyModelSpec {
    pub vocab_size: usize,
    pub d0: usize,
    pub d1: usize,
    pub seq_len: usize,
}

impl Default for TinyModelSpec {
    fn default() -> Self {
        Self {
            vocab_size: 30,
            d0: 8,
            d1: 6,
            seq_len: 7,
        }
    }
}

/// A seeded random model, a random partially padded tweet, and a target
/// distribution drawn from five simulated annotators.
pub fn random_case(spec: TinyModelSpec, seed: u64) -> (ModelParams<f64>, EncodedTweet, [f64; 4]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut emb = Tensor::zeros(&[spec.vocab_size, spec.d0]);
    emb.data_mut().iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
    let params = ModelParams::init(emb, spec.d1, spec.seq_len, &mut rng).expect("valid embedding shape");

    let len = rng.random_range(1..=spec.seq_len);
    let mut indices = vec![PAD_INDEX; spec.seq_len];
    let mut mask = vec![0u8; spec.seq_len];
    for n in 0..len {
        indices[n] = rng.random_range(1..spec.vocab_size);
        mask[n] = 1;
    }
    let mut q = [0.0; 4];
    for _ in 0..5 {
        q[rng.random_range(0..4)] += 0.2;
    }
    (
        params,
        EncodedTweet {
            indices,
            mask,
            true_length: len,
        },
        q,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub passed: bool,
    pub worst_seed: u64,
    pub worst: GradCheckReport,
}

/// Runs `trials` checks on tiny models seeded `seed, seed + 1, ...`.
/// `corrupt` perturbs one analytic attention entry by 1e-3 in every trial.
pub fn run_trials(seed: u64, trials: usize, corrupt: bool) -> Result<TrialSummary> {
    assert!(trials > 0, "at least one trial");
    let reports = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let s = seed.wrapping_add(t);
            let (params, tweet, q) = random_case(TinyModelSpec::default(), s);
            let r = finite_difference_check_with(&params, &tweet, &q, DEFAULT_STEP, s, |g| {
                if corrupt {
                    g.layers.attention.w.data_mut()[3] += 1e-3;
                }
            })?;
            Ok((s, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let (worst_seed, worst) = reports
        .into_iter()
        .reduce(|a, b| {
            if b.1.max_relative_error > a.1.max_relative_error {
                b
            } else {
                a
            }
        })
        .expect("trials > 0");
    Ok(TrialSummary {
        trials,
        passed: worst.max_relative_error < TOLERANCE,
        worst_seed,
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_models_pass_with_both_steps() {
        for seed in 0..5 {
            let (params, t, q) = random_case(TinyModelSpec::default(), seed);
            for step in [1e-5, 1e-6] {
                let r = finite_difference_check(&params, &t, &q, step, seed).unwrap();
                assert!(r.max_relative_error < 1e-4, "seed {seed} step {step}: {r:?}");
                assert!(r.entries_checked > 900);
            }
        }
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        let (params, t, q) = random_case(TinyModelSpec::default(), 7);
        let r = finite_difference_check_with(&params, &t, &q, 1e-5, 7, |g| {
            g.layers.attention.w.data_mut()[3] += 1e-3;
        })
        .unwrap();
        assert!(r.max_relative_error > 1e-4);
        assert_eq!(r.worst_tensor, "attention.w");
    }
}
