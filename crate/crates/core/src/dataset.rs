//! Challenge JSONL ingestion, annotation distributions and fold splits.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Click-baiting levels an annotator can choose.
pub const GRID: [f64; 4] = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
/// Judgments farther than this from every grid level are rejected.
pub const GRID_TOLERANCE: f64 = 1e-3;
pub const ANNOTATORS: usize = 5;

/// Probability mass over the four levels of [`GRID`].
pub type AnnotationDistribution = [f64; 4];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tweet {
    pub id: String,
    /// The `postText` array joined with single spaces.
    pub post_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TruthClass {
    #[serde(rename = "clickbait")]
    Clickbait,
    #[serde(rename = "no-clickbait")]
    NoClickbait,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthRecord {
    pub id: String,
    /// Snapped to [`GRID`].
    pub judgments: [f64; ANNOTATORS],
    pub truth_mean: f64,
    pub truth_median: f64,
    pub truth_mode: f64,
    pub truth_class: TruthClass,
}

impl TruthRecord {
    pub fn distribution(&self) -> AnnotationDistribution {
        judgments_to_distribution(&self.judgments)
    }
}

/// A tweet joined with its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledTweet {
    pub tweet: Tweet,
    pub truth: TruthRecord,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawId {
    Text(String),
    Number(serde_json::Number),
}

impl RawId {
    fn into_string(self) -> String {
        match self {
            RawId::Text(s) => s,
            RawId::Number(n) => n.to_string(),
        }
    }
}

#[derive(Deserialize)]
struct RawInstance {
    id: RawId,
    #[serde(rename = "postText")]
    post_text: Vec<String>,
}

#[derive(Deserialize)]
struct RawTruth {
    id: RawId,
    #[serde(rename = "truthJudgments")]
    judgments: Vec<f64>,
    #[serde(rename = "truthMean")]
    mean: f64,
    #[serde(rename = "truthMedian")]
    median: f64,
    #[serde(rename = "truthMode")]
    mode: f64,
    #[serde(rename = "truthClass")]
    class: TruthClass,
}

fn for_each_line(path: &Path, mut f: impl FnMut(usize, &str) -> Result<()>) -> Result<()> {
    let unreadable = |source| Error::UnreadableFile {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(unreadable)?);
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(unreadable)?;
        if line.trim().is_empty() {
            continue;
        }
        f(i + 1, &line)?;
    }
    Ok(())
}

fn malformed(path: &Path, line: usize, message: impl ToString) -> Error {
    Error::MalformedLine {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    }
}

/// One tweet per non-blank line, in file order.
pub fn load_instances(path: impl AsRef<Path>) -> Result<Vec<Tweet>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for_each_line(path, |line, text| {
        let raw: RawInstance = serde_json::from_str(text).map_err(|e| malformed(path, line, e))?;
        let id = raw.id.into_string();
        if id.is_empty() {
            return Err(malformed(path, line, "empty id"));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        out.push(Tweet {
            id,
            post_text: raw.post_text.join(" "),
        });
        Ok(())
    })?;
    Ok(out)
}

/// Nearest grid level, if within [`GRID_TOLERANCE`].
pub fn snap_judgment(value: f64) -> Option<f64> {
    GRID.into_iter().find(|g| (value - g).abs() <= GRID_TOLERANCE)
}

pub fn load_truth(path: impl AsRef<Path>) -> Result<BTreeMap<String, TruthRecord>> {
    let path = path.as_ref();
    let mut out = BTreeMap::new();
    for_each_line(path, |line, text| {
        let raw: RawTruth = serde_json::from_str(text).map_err(|e| malformed(path, line, e))?;
        let id = raw.id.into_string();
        if raw.judgments.len() != ANNOTATORS {
            return Err(malformed(
                path,
                line,
                format!("expected {ANNOTATORS} judgments, found {}", raw.judgments.len()),
            ));
        }
        let mut judgments = [0.0; ANNOTATORS];
        for (dst, &v) in judgments.iter_mut().zip(&raw.judgments) {
            *dst = snap_judgment(v).ok_or_else(|| Error::JudgmentOffGrid {
                path: path.to_path_buf(),
                line,
                value: v,
            })?;
        }
        let mean = judgments.iter().sum::<f64>() / ANNOTATORS as f64;
        if (mean - raw.mean).abs() > GRID_TOLERANCE {
            return Err(malformed(
                path,
                line,
                format!("truthMean {} disagrees with judgments (mean {mean})", raw.mean),
            ));
        }
        let record = TruthRecord {
            id: id.clone(),
            judgments,
            truth_mean: raw.mean,
            truth_median: raw.median,
            truth_mode: raw.mode,
            truth_class: raw.class,
        };
        if out.insert(id.clone(), record).is_some() {
            return Err(Error::DuplicateId(id));
        }
        Ok(())
    })?;
    Ok(out)
}

/// Fraction of the annotators that chose each level.
pub fn judgments_to_distribution(judgments: &[f64; ANNOTATORS]) -> AnnotationDistribution {
    let mut counts = [0usize; 4];
    for &j in judgments {
        let level = (j * 3.0).round().clamp(0.0, 3.0) as usize;
        counts[level] += 1;
    }
    counts.map(|c| c as f64 / ANNOTATORS as f64)
}

/// Pairs every instance with its truth record, keeping instance order.
pub fn join(instances: Vec<Tweet>, truth: &BTreeMap<String, TruthRecord>) -> Result<Vec<LabelledTweet>> {
    if instances.len() != truth.len() {
        return Err(Error::IdMismatch(format!(
            "{} instances but {} truth records",
            instances.len(),
            truth.len()
        )));
    }
    instances
        .into_iter()
        .map(|tweet| {
            let truth = truth
                .get(&tweet.id)
                .cloned()
                .ok_or_else(|| Error::IdMismatch(format!("no truth record for id {:?}", tweet.id)))?;
            Ok(LabelledTweet { tweet, truth })
        })
        .collect()
}

/// Loads several instance/truth file pairs and concatenates them, rejecting
/// ids that occur in more than one corpus.
pub fn load_labelled<P: AsRef<Path>>(pairs: &[(P, P)]) -> Result<Vec<LabelledTweet>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (instances, truth) in pairs {
        let truth = load_truth(truth)?;
        for t in join(load_instances(instances)?, &truth)? {
            if !seen.insert(t.tweet.id.clone()) {
                return Err(Error::DuplicateId(t.tweet.id));
            }
            out.push(t);
        }
    }
    Ok(out)
}

/// Writes instances in the challenge format, `postText` as a one-element
/// array.
pub fn write_instances(tweets: &[Tweet], mut out: impl Write) -> Result<()> {
    for t in tweets {
        let line = serde_json::json!({ "id": t.id, "postText": [t.post_text] });
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Writes truth records in the challenge format.
pub fn write_truth<'a>(records: impl IntoIterator<Item = &'a TruthRecord>, mut out: impl Write) -> Result<()> {
    for r in records {
        let line = serde_json::json!({
            "id": r.id,
            "truthJudgments": r.judgments,
            "truthMean": r.truth_mean,
            "truthMedian": r.truth_median,
            "truthMode": r.truth_mode,
            "truthClass": r.truth_class,
        });
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// `k` disjoint partitions whose union is the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub seed: u64,
    pub folds: Vec<Vec<String>>,
}

impl FoldSplit {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Every id outside fold `i`, in fold order.
    pub fn training_ids(&self, i: usize) -> Vec<String> {
        self.folds
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .flat_map(|(_, f)| f.iter().cloned())
            .collect()
    }
}

/// Seeded shuffle followed by round-robin assignment, so fold sizes differ
/// by at most one.
pub fn split_folds(ids: &[String], k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 || ids.len() < k {
        return Err(Error::TooFewSamples {
            samples: ids.len(),
            folds: k,
        });
    }
    let mut order = ids.to_vec();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::with_capacity(ids.len() / k + 1); k];
    for (i, id) in order.into_iter().enumerate() {
        folds[i % k].push(id);
    }
    Ok(FoldSplit { seed, folds })
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use proptest::prelude::*;

    use super::*;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_instances() {
        let f = file(concat!(
            r#"{"id":"1","postText":["Here comes (almost) free money."],"postMedia":[]}"#,
            "\n",
            r#"{"id":"2","postText":["a","b"]}"#,
            "\n"
        ));
        let t = load_instances(f.path()).unwrap();
        assert_eq!(t[0].post_text, "Here comes (almost) free money.");
        assert_eq!(t[1].post_text, "a b");
        assert!(load_instances(file("").path()).unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_instances() {
        let dup = file("{\"id\":\"1\",\"postText\":[\"x\"]}\n{\"id\":\"1\",\"postText\":[\"y\"]}\n");
        assert!(matches!(load_instances(dup.path()), Err(Error::DuplicateId(id)) if id == "1"));
        let broken = file("{\"id\":\"1\",\"postText\":[\"x\"]}\n{\"id\":\"2\"}\n");
        assert!(matches!(
            load_instances(broken.path()),
            Err(Error::MalformedLine { line: 2, .. })
        ));
    }

    fn truth_line(id: &str, j: &str, mean: f64, class: &str) -> String {
        format!(
            r#"{{"id":"{id}","truthJudgments":{j},"truthMean":{mean},"truthMedian":0.0,"truthMode":0.0,"truthClass":"{class}"}}"#
        )
    }

    #[test]
    fn snaps_judgments() {
        let f = file(&truth_line(
            "9",
            "[0.0, 0.3333333, 1.0, 0.6666667, 0.0]",
            0.4,
            "no-clickbait",
        ));
        let t = load_truth(f.path()).unwrap();
        let r = &t["9"];
        assert_eq!(r.judgments, [0.0, 1.0 / 3.0, 1.0, 2.0 / 3.0, 0.0]);
        assert_eq!(r.truth_class, TruthClass::NoClickbait);
        let g = file(&truth_line("3", "[1, 1, 1, 1, 0.6666666666]", 0.9333333, "clickbait"));
        assert_eq!(load_truth(g.path()).unwrap()["3"].truth_class, TruthClass::Clickbait);
    }

    #[test]
    fn off_grid_judgment_is_rejected() {
        let f = file(&truth_line("1", "[0.5, 0, 0, 0, 0]", 0.1, "no-clickbait"));
        assert!(matches!(
            load_truth(f.path()),
            Err(Error::JudgmentOffGrid { line: 1, .. })
        ));
    }

    #[test]
    fn distribution_cases() {
        assert_eq!(judgments_to_distribution(&[0.0; 5]), [1.0, 0.0, 0.0, 0.0]);
        let t = 1.0 / 3.0;
        assert_eq!(
            judgments_to_distribution(&[0.0, 0.0, t, 2.0 * t, 1.0]),
            [0.4, 0.2, 0.2, 0.2]
        );
    }

    #[test]
    fn truth_round_trip() {
        let f = file(&format!(
            "{}\n{}\n",
            truth_line("a", "[0.0, 0.3333333, 1.0, 0.6666667, 0.0]", 0.4, "no-clickbait"),
            truth_line("b", "[1.0, 1.0, 1.0, 0.6666667, 0.6666667]", 0.8666667, "clickbait")
        ));
        let records = load_truth(f.path()).unwrap();
        let mut out = Vec::new();
        write_truth(records.values(), &mut out).unwrap();
        let back = load_truth(file(std::str::from_utf8(&out).unwrap()).path()).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn fold_sizes() {
        let ids: Vec<String> = (0..10).map(|i| i.to_string()).collect();
        let s = split_folds(&ids, 5, 3).unwrap();
        assert!(s.folds.iter().all(|f| f.len() == 2));
        assert_eq!(s, split_folds(&ids, 5, 3).unwrap());
        let ids: Vec<String> = (0..11).map(|i| i.to_string()).collect();
        let mut sizes: Vec<usize> = split_folds(&ids, 5, 3).unwrap().folds.iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes, [2, 2, 2, 2, 3]);
        assert!(matches!(split_folds(&ids[..3], 5, 0), Err(Error::TooFewSamples { .. })));
    }

    proptest! {
        #[test]
        fn distribution_ignores_order(levels in prop::array::uniform5(0usize..4), seed in any::<u64>()) {
            let j = levels.map(|l| GRID[l]);
            let mut shuffled = j;
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let p = judgments_to_distribution(&j);
            prop_assert_eq!(p, judgments_to_distribution(&shuffled));
            prop_assert_eq!(p.iter().sum::<f64>(), 1.0);
        }

        #[test]
        fn folds_partition_the_ids(n in 2usize..60, k in 2usize..8, seed in any::<u64>()) {
            prop_assume!(n >= k);
            let ids: Vec<String> = (0..n).map(|i| format!("id{i}")).collect();
            let s = split_folds(&ids, k, seed).unwrap();
            let mut all: Vec<String> = s.folds.concat();
            all.sort();
            let mut want = ids.clone();
            want.sort();
            prop_assert_eq!(all, want);
            let sizes: Vec<usize> = s.folds.iter().map(Vec::len).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }

        #[test]
        fn instances_round_trip(texts in prop::collection::vec("[ -~éü😀]{0,40}", 0..10)) {
            let tweets: Vec<Tweet> = texts
                .into_iter()
                .enumerate()
                .map(|(i, post_text)| Tweet { id: format!("{i}"), post_text })
                .collect();
            let mut buf = Vec::new();
            write_instances(&tweets, &mut buf).unwrap();
            let f = file(std::str::from_utf8(&buf).unwrap());
            prop_assert_eq!(load_instances(f.path()).unwrap(), tweets);
        }
    }
}
