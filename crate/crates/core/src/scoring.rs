//! Scores and classes derived from distributions, metrics, prediction files.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{AnnotationDistribution, TruthClass};
use crate::error::{Error, Result};

/// Expected click-baiting level: `p2/3 + 2·p3/3 + p4`.
pub fn truth_mean(p: &AnnotationDistribution) -> f64 {
    p[1] / 3.0 + 2.0 * p[2] / 3.0 + p[3]
}

/// No-clickbait iff the two lower levels hold strictly more mass; a tie is
/// clickbait.
pub fn truth_class(p: &AnnotationDistribution) -> TruthClass {
    if p[0] + p[1] > p[2] + p[3] {
        TruthClass::NoClickbait
    } else {
        TruthClass::Clickbait
    }
}

/// Mean of squared differences over `(predicted, true)` pairs.
pub fn mse(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let total: f64 = pairs.iter().map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(total / pairs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub mse: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(skip)]
    pub tp: usize,
    #[serde(skip)]
    pub fp: usize,
    #[serde(skip)]
    pub tn: usize,
    #[serde(skip)]
    pub fn_: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Confusion counts with clickbait as the positive class. `mse` is left at
/// zero; [`evaluate`] fills it in. Zero denominators give 0.
pub fn classification_metrics(
    pred: &HashMap<String, TruthClass>,
    truth: &HashMap<String, TruthClass>,
) -> Result<Metrics> {
    if pred.len() != truth.len() {
        return Err(Error::IdMismatch(format!(
            "{} predictions but {} truth labels",
            pred.len(),
            truth.len()
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (id, &p) in pred {
        let &t = truth
            .get(id)
            .ok_or_else(|| Error::IdMismatch(format!("id {id:?} has no truth label")))?;
        match (p, t) {
            (TruthClass::Clickbait, TruthClass::Clickbait) => tp += 1,
            (TruthClass::Clickbait, TruthClass::NoClickbait) => fp += 1,
            (TruthClass::NoClickbait, TruthClass::NoClickbait) => tn += 1,
            (TruthClass::NoClickbait, TruthClass::Clickbait) => fn_ += 1,
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Metrics {
        mse: 0.0,
        accuracy: ratio(tp + tn, tp + fp + tn + fn_),
        precision,
        recall,
        f1,
        tp,
        fp,
        tn,
        fn_,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    #[serde(rename = "clickbaitScore")]
    pub clickbait_score: f64,
}

impl Prediction {
    /// Class implied by the score alone: clickbait from 0.5 up, matching the
    /// tie rule of [`truth_class`] at the uniform distribution.
    pub fn class_from_score(&self) -> TruthClass {
        if self.clickbait_score >= 0.5 {
            TruthClass::Clickbait
        } else {
            TruthClass::NoClickbait
        }
    }
}

/// One `{"id":…,"clickbaitScore":…}` object per line, in input order.
pub fn write_predictions(preds: &[Prediction], path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for p in preds {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path).map_err(|source| Error::UnreadableFile {
        path: path.to_path_buf(),
        source,
    })?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let p: Prediction = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(p);
    }
    Ok(out)
}

/// MSE against `truthMean` plus classification metrics on
/// [`Prediction::class_from_score`].
pub fn evaluate(preds: &[Prediction], truth: &BTreeMap<String, crate::dataset::TruthRecord>) -> Result<Metrics> {
    let mut pairs = Vec::with_capacity(preds.len());
    let mut pred_classes = HashMap::with_capacity(preds.len());
    for p in preds {
        let t = truth
            .get(&p.id)
            .ok_or_else(|| Error::IdMismatch(format!("prediction id {:?} has no truth record", p.id)))?;
        pairs.push((p.clickbait_score, t.truth_mean));
        if pred_classes.insert(p.id.clone(), p.class_from_score()).is_some() {
            return Err(Error::DuplicateId(p.id.clone()));
        }
    }
    let truth_classes: HashMap<String, TruthClass> = truth.iter().map(|(id, r)| (id.clone(), r.truth_class)).collect();
    let mut m = classification_metrics(&pred_classes, &truth_classes)?;
    m.mse = mse(&pairs)?;
    Ok(m)
}
