//! Small labelled corpora with a learnable signal, for examples and tests.
//! Tweets mix "bait" and "news" vocabulary; the share of bait words drives
//! the simulated annotators.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{write_instances, write_truth, LabelledTweet, TruthClass, TruthRecord, Tweet, ANNOTATORS, GRID};
use crate::embeddings::{write_vectors, PretrainedVectors};
use crate::error::Result;

pub const BAIT_WORDS: [&str; 10] = [
    "you", "won't", "believe", "shocking", "secret", "amazing", "reasons", "why", "trick", "happened",
];
pub const NEWS_WORDS: [&str; 10] = [
    "government",
    "report",
    "minister",
    "announces",
    "budget",
    "court",
    "election",
    "results",
    "council",
    "ruling",
];
pub const FILLER_WORDS: [&str; 6] = ["the", "a", "of", "in", "today", "new"];

fn pick<'a>(rng: &mut ChaCha8Rng, words: &[&'a str]) -> &'a str {
    words[rng.random_range(0..words.len())]
}

/// `n` tweets with ids `toy-0 .. toy-{n-1}`.
pub fn toy_corpus(n: usize, seed: u64) -> Vec<LabelledTweet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let bait = rng.random_range(0..=4) as f64 / 4.0;
            let len = rng.random_range(3..=9);
            let mut words: Vec<String> = (0..len)
                .map(|_| {
                    let u: f64 = rng.random();
                    let w = if u < 0.2 {
                        pick(&mut rng, &FILLER_WORDS)
                    } else if u < 0.2 + 0.8 * bait {
                        pick(&mut rng, &BAIT_WORDS)
                    } else {
                        pick(&mut rng, &NEWS_WORDS)
                    };
                    w.to_string()
                })
                .collect();
            if rng.random_bool(0.3) {
                words[0] = words[0].to_uppercase();
            }
            if rng.random_bool(0.3) {
                words.push(format!("http://t.co/{i:x}"));
            }
            if bait > 0.5 && rng.random_bool(0.5) {
                words.push("!!!".into());
            }

            let mut judgments = [0.0; ANNOTATORS];
            for j in &mut judgments {
                let level = (bait * 3.0 + rng.random_range(-1.0..=1.0)).round().clamp(0.0, 3.0);
                *j = GRID[level as usize];
            }
            let id = format!("toy-{i}");
            let mean = judgments.iter().sum::<f64>() / ANNOTATORS as f64;
            let mut sorted = judgments;
            sorted.sort_by(f64::total_cmp);
            let clickbait = judgments.iter().filter(|&&j| j > 0.5).count() * 2 > ANNOTATORS;
            LabelledTweet {
                tweet: Tweet {
                    id: id.clone(),
                    post_text: words.join(" "),
                },
                truth: TruthRecord {
                    id,
                    judgments,
                    truth_mean: mean,
                    truth_median: sorted[ANNOTATORS / 2],
                    truth_mode: mode(&judgments),
                    truth_class: if clickbait {
                        TruthClass::Clickbait
                    } else {
                        TruthClass::NoClickbait
                    },
                },
            }
        })
        .collect()
}

fn mode(js: &[f64; ANNOTATORS]) -> f64 {
    let count = |x: f64| js.iter().filter(|&&y| y == x).count();
    GRID.into_iter().rev().max_by_key(|&g| count(g)).unwrap_or(0.0)
}

/// Random vectors for every toy word plus the `<url>` tag.
pub fn toy_vectors(dim: usize, seed: u64) -> PretrainedVectors {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut v = PretrainedVectors::new(dim);
    for w in BAIT_WORDS
        .iter()
        .chain(&NEWS_WORDS)
        .chain(&FILLER_WORDS)
        .chain(&["<url>"])
    {
        let vec = (0..dim).map(|_| rng.random_range(-0.5f32..0.5)).collect();
        v.insert(*w, vec).expect("dimension matches");
    }
    v
}

/// File locations written by [`write_toy_dataset`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyFiles {
    pub instances: PathBuf,
    pub truth: PathBuf,
    pub embeddings: PathBuf,
}

/// Writes `instances.jsonl`, `truth.jsonl` and `vectors.txt` under `dir`.
pub fn write_toy_dataset(dir: impl AsRef<Path>, n: usize, dim: usize, seed: u64) -> Result<ToyFiles> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let corpus = toy_corpus(n, seed);
    let files = ToyFiles {
        instances: dir.join("instances.jsonl"),
        truth: dir.join("truth.jsonl"),
        embeddings: dir.join("vectors.txt"),
    };
    let tweets: Vec<Tweet> = corpus.iter().map(|t| t.tweet.clone()).collect();
    write_instances(&tweets, BufWriter::new(File::create(&files.instances)?))?;
    write_truth(
        corpus.iter().map(|t| &t.truth),
        BufWriter::new(File::create(&files.truth)?),
    )?;
    write_vectors(
        &toy_vectors(dim, seed),
        BufWriter::new(File::create(&files.embeddings)?),
    )?;
    Ok(files)
}
