//! Reads a word-vector file, builds the vocabulary of a small corpus and the
//! initial embedding matrix.

use clickbait::embeddings::{build_embedding_matrix, load_pretrained_for};
use clickbait::synthetic::{toy_corpus, write_toy_dataset};
use clickbait::text::{preprocess, Vocabulary};

fn main() -> clickbait::Result<()> {
    let dir = tempfile::tempdir()?;
    let files = write_toy_dataset(dir.path(), 50, 8, 1)?;
    let corpus: Vec<Vec<String>> = toy_corpus(50, 1)
        .iter()
        .map(|t| preprocess(&t.tweet.post_text))
        .collect();
    let wanted = corpus.iter().flatten().cloned().collect();
    let vectors = load_pretrained_for(&files.embeddings, 8, &wanted)?;
    let vocab = Vocabulary::build(&corpus, &vectors.tokens())?;
    let m = build_embedding_matrix(&vocab, &vectors, 7);

    println!("{} vectors loaded, vocabulary {}", vectors.len(), vocab.len());
    for (i, tok) in vocab.tokens().iter().enumerate().step_by(4) {
        let source = if vectors.get(tok).is_some() && i > 1 {
            "pretrained"
        } else {
            "random/zero"
        };
        println!("{i:>3} {tok:<12} {source:<11} {:?}", &m.row(i)[..3]);
    }
    Ok(())
}
