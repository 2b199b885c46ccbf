//! Normalization, tokenization and fixed-length encoding of a few tweets.

use std::collections::HashSet;

use clickbait::text::{encode, normalize, preprocess, tokenize, Vocabulary};

fn main() {
    let tweets = [
        "You WON'T believe what happened next!!! http://t.co/xyz",
        "@jane check #BreakingNews :) sooooo good",
        "Minister announces budget, 3.5% rise <3",
    ];
    let corpus: Vec<Vec<String>> = tweets.iter().map(|t| preprocess(t)).collect();
    for (raw, toks) in tweets.iter().zip(&corpus) {
        println!("raw:        {raw}");
        println!("normalized: {}", normalize(raw));
        println!("tokens:     {:?}", tokenize(&normalize(raw)));
        assert_eq!(&tokenize(&normalize(raw)), toks);
    }

    let known: HashSet<String> = ["you", "believe", "what", "check", "good", "minister", "budget"]
        .into_iter()
        .map(String::from)
        .collect();
    let vocab = Vocabulary::build(&corpus, &known).expect("corpus has tokens");
    let n = corpus.iter().map(Vec::len).max().unwrap();
    println!("\nvocabulary of {} entries, N = {n}", vocab.len());
    let e = encode(&corpus[0], &vocab, n);
    println!("indices {:?}\nmask    {:?}", e.indices, e.mask);
}
