//! Trains a small five-member ensemble on a synthetic corpus, saves it, and
//! scores a few unseen tweets.

use clickbait::scoring::truth_mean;
use clickbait::synthetic::{toy_corpus, toy_vectors};
use clickbait::trainer::{train_ensemble, Ensemble, TrainConfig};

fn main() -> clickbait::Result<()> {
    let corpus = toy_corpus(300, 0);
    let config = TrainConfig {
        d0: 12,
        d1: 8,
        max_epochs: 8,
        ..TrainConfig::default()
    };
    let ensemble = train_ensemble(&corpus, &toy_vectors(12, 0), &config, &|m, r| {
        println!(
            "member {m} epoch {:>2} loss {:.4} val mse {:.4}",
            r.epoch, r.train_loss, r.validation_mse
        );
    })?;
    let dir = tempfile::tempdir()?;
    ensemble.save(dir.path())?;
    let loaded = Ensemble::load(dir.path())?;

    for text in [
        "You won't BELIEVE this secret trick!!!",
        "Council announces election results today",
    ] {
        let r = loaded.predict_with_attention(text)?;
        println!(
            "\n{text}\n  distribution {:.3?}, score {:.3}",
            r.distribution,
            truth_mean(&r.distribution)
        );
        for (tok, a) in r.tokens.iter().zip(&r.alpha) {
            println!("  {tok:<10} {a:.3}");
        }
    }
    Ok(())
}
