use crate::error::{Error, Result};
use crate::nn::{Gradients, ModelParams};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Scales every gradient entry by `threshold / g` when the global L2 norm
/// `g` exceeds `threshold`. Returns the norm before clipping.
pub fn clip_gradients(grads: &mut Gradients<f32>, threshold: f32) -> f32 {
    assert!(threshold > 0.0, "clip threshold must be positive");
    let norm = grads.global_norm();
    if norm > threshold {
        grads.scale(threshold / norm);
        debug_assert!(grads.global_norm() <= threshold + 1e-6 * threshold.max(1.0));
    }
    norm
}

/// First and second moment estimates, one per parameter entry.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: ModelParams<f32>,
    pub v: ModelParams<f32>,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams<f32>) -> Self {
        Self {
            m: ModelParams::zeros(params.config),
            v: ModelParams::zeros(params.config),
            t: 0,
        }
    }
}

fn update(theta: &mut f32, g: f32, m: &mut f32, v: &mut f32, c: &StepConstants) {
    *m = c.b1 * *m + (1.0 - c.b1) * g;
    *v = c.b2 * *v + (1.0 - c.b2) * g * g;
    let m_hat = *m / c.bias1;
    let v_hat = *v / c.bias2;
    *theta -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
}

struct StepConstants {
    lr: f32,
    b1: f32,
    b2: f32,
    eps: f32,
    bias1: f32,
    bias2: f32,
}

/// One bias-corrected Adam update. Embedding rows without a gradient are
/// treated as having a zero gradient. The padding row is reset to zero.
pub fn adam_step(params: &mut ModelParams<f32>, grads: &Gradients<f32>, state: &mut AdamState, lr: f64) -> Result<()> {
    if state.m.config != params.config || state.v.config != params.config {
        return Err(Error::shape(
            "optimizer state",
            &[params.config.vocab_size, params.config.d0, params.config.d1],
            &[state.m.config.vocab_size, state.m.config.d0, state.m.config.d1],
        ));
    }
    grads.layers.check(params.config.d0, params.config.d1)?;
    let d0 = params.config.d0;
    if let Some((&row, g)) = grads
        .embedding
        .iter()
        .find(|(&row, g)| row >= params.config.vocab_size || g.len() != d0)
    {
        return Err(Error::shape(
            "embedding gradient row",
            &[params.config.vocab_size, d0],
            &[row, g.len()],
        ));
    }

    state.t += 1;
    let t = state.t as i32;
    let c = StepConstants {
        lr: lr as f32,
        b1: BETA1 as f32,
        b2: BETA2 as f32,
        eps: EPSILON as f32,
        bias1: (1.0 - BETA1.powi(t)) as f32,
        bias2: (1.0 - BETA2.powi(t)) as f32,
    };

    let emb = params.embedding.data_mut();
    let (me, ve) = (state.m.embedding.data_mut(), state.v.embedding.data_mut());
    let mut rows = grads.embedding.iter().peekable();
    for row in 0..params.config.vocab_size {
        let g = match rows.peek() {
            Some(&(&r, g)) if r == row => {
                rows.next();
                Some(g)
            }
            _ => None,
        };
        for j in 0..d0 {
            let k = row * d0 + j;
            update(&mut emb[k], g.map_or(0.0, |g| g[j]), &mut me[k], &mut ve[k], &c);
        }
    }
    params.zero_pad_row();

    let layers = params.layers.tensors_mut();
    let ms = state.m.layers.tensors_mut();
    let vs = state.v.layers.tensors_mut();
    for (((p, g), m), v) in layers.into_iter().zip(grads.layers.tensors()).zip(ms).zip(vs) {
        let (m, v) = (m.data_mut(), v.data_mut());
        for (k, (theta, &g)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
            update(theta, g, &mut m[k], &mut v[k], &c);
        }
    }
    Ok(())
}
