//! Scores a prediction file against truth labels.

use std::collections::BTreeMap;

use clickbait::dataset::load_truth;
use clickbait::scoring::{evaluate, read_predictions, write_predictions, Prediction};
use clickbait::synthetic::write_toy_dataset;

fn main() -> clickbait::Result<()> {
    let dir = tempfile::tempdir()?;
    let f = write_toy_dataset(dir.path(), 40, 4, 5)?;
    let truth: BTreeMap<_, _> = load_truth(&f.truth)?;

    // A deliberately shrunk predictor: halfway between the truth and 0.5.
    let preds: Vec<Prediction> = truth
        .values()
        .map(|r| Prediction {
            id: r.id.clone(),
            clickbait_score: 0.5 * r.truth_mean + 0.25,
        })
        .collect();
    let path = dir.path().join("pred.jsonl");
    write_predictions(&preds, &path)?;
    let m = evaluate(&read_predictions(&path)?, &truth)?;
    println!("{}", serde_json::to_string_pretty(&m)?);
    println!("confusion: tp {} fp {} tn {} fn {}", m.tp, m.fp, m.tn, m.fn_);
    Ok(())
}
