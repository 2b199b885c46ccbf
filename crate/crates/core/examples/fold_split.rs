//! Loads a labelled corpus, shows annotation distributions and a seeded
//! five-fold partition.

use clickbait::dataset::{load_labelled, split_folds};
use clickbait::scoring::{truth_class, truth_mean};
use clickbait::synthetic::write_toy_dataset;

fn main() -> clickbait::Result<()> {
    let dir = tempfile::tempdir()?;
    let f = write_toy_dataset(dir.path(), 23, 4, 2)?;
    let corpus = load_labelled(&[(&f.instances, &f.truth)])?;
    for t in corpus.iter().take(4) {
        let p = t.truth.distribution();
        println!(
            "{:<7} {:?} mean {:.3} {:?}  {}",
            t.tweet.id,
            p,
            truth_mean(&p),
            truth_class(&p),
            t.tweet.post_text
        );
    }
    let ids: Vec<String> = corpus.iter().map(|t| t.tweet.id.clone()).collect();
    let split = split_folds(&ids, 5, 0)?;
    for (i, fold) in split.folds.iter().enumerate() {
        println!(
            "fold {i}: {} validation, {} training",
            fold.len(),
            split.training_ids(i).len()
        );
    }
    Ok(())
}
