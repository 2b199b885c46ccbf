//! Saves a single model, lists its manifest, and loads it back.

use clickbait::embeddings::build_embedding_matrix;
use clickbait::model::TrainedModel;
use clickbait::nn::ModelParams;
use clickbait::synthetic::{toy_corpus, toy_vectors};
use clickbait::text::{preprocess, Vocabulary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> clickbait::Result<()> {
    let vectors = toy_vectors(6, 0);
    let corpus: Vec<Vec<String>> = toy_corpus(20, 0)
        .iter()
        .map(|t| preprocess(&t.tweet.post_text))
        .collect();
    let vocab = Vocabulary::build(&corpus, &vectors.tokens())?;
    let emb = build_embedding_matrix(&vocab, &vectors, 0);
    let params = ModelParams::init(emb, 4, 12, &mut ChaCha8Rng::seed_from_u64(0))?;
    let model = TrainedModel {
        params,
        vocab,
        init_seed: 0,
        best_epoch: 1,
        validation_mse: 0.0,
    };

    let dir = tempfile::tempdir()?;
    model.save(dir.path())?;
    let m = model.manifest();
    println!(
        "format {} d0 {} d1 {} N {} dtype {}",
        m.format_version, m.d0, m.d1, m.seq_len, m.dtype
    );
    for t in &m.tensors {
        println!(
            "  {:<20} {:?} @ {} ({} bytes)",
            t.name, t.shape, t.byte_offset, t.byte_length
        );
    }
    let back = TrainedModel::load(dir.path())?;
    assert_eq!(back, model);
    let (p, _) = back.predict_encoded(&back.encode("shocking secret you won't believe"))?;
    println!("reloaded model predicts {p:.3?}");
    Ok(())
}
