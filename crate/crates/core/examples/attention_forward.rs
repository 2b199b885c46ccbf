//! One inference pass through a randomly initialized model, printing the
//! attention weights and the level distribution.

use clickbait::nn::{model_forward, DropoutRates, Mode, ModelParams, Tensor};
use clickbait::text::EncodedTweet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> clickbait::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (vocab, d0, d1, n) = (20, 6, 4, 8);
    let mut emb = Tensor::zeros(&[vocab, d0]);
    emb.data_mut().iter_mut().for_each(|x| *x = rng.random_range(-0.5..0.5));
    let mut params: ModelParams<f32> = ModelParams::init(emb, d1, n, &mut rng)?;
    params.zero_pad_row();

    let tweet = EncodedTweet {
        indices: vec![5, 9, 2, 14, 7, 0, 0, 0],
        mask: vec![1, 1, 1, 1, 1, 0, 0, 0],
        true_length: 5,
    };
    let out = model_forward(&tweet, &params, Mode::Infer, &DropoutRates::NONE, &mut rng)?;
    println!("alpha {:?}", out.alpha);
    println!("p     {:?}", out.p);
    let score: f32 = out
        .p
        .iter()
        .zip([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0])
        .map(|(p, l)| p * l)
        .sum();
    println!("clickbait score {score:.4}");
    Ok(())
}
