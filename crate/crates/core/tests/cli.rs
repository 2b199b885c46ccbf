use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use clickbait::synthetic::{write_toy_dataset, ToyFiles};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_clickbait"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Trained {
    _dir: tempfile::TempDir,
    files: ToyFiles,
    model: PathBuf,
    stdout: String,
}

/// One small ensemble shared by the tests in this file.
fn trained() -> &'static Trained {
    static CELL: OnceLock<Trained> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let files = write_toy_dataset(dir.path().join("data"), 40, 6, 1).unwrap();
        let config = dir.path().join("cfg.toml");
        std::fs::write(&config, "d0 = 6\nd1 = 4\nmax_epochs = 2\nseed = 99\n").unwrap();
        let model = dir.path().join("model");
        let out = run(&[
            "train",
            "--instances",
            s(&files.instances),
            "--truth",
            s(&files.truth),
            "--embeddings",
            s(&files.embeddings),
            "--out",
            s(&model),
            "--seed",
            "5",
            "--config",
            s(&config),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        Trained {
            _dir: dir,
            files,
            model,
            stdout: String::from_utf8(out.stdout).unwrap(),
        }
    })
}

#[test]
fn train_reports_members_and_flag_beats_file() {
    let t = trained();
    let report: Vec<Value> = serde_json::from_str(&t.stdout).unwrap();
    assert_eq!(report.len(), 5);
    for m in &report {
        let e = m["best_epoch"].as_u64().unwrap();
        assert!((1..=2).contains(&e));
        assert!(m["validation_mse"].as_f64().unwrap() >= 0.0);
    }
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(t.model.join("ensemble.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["config"]["d1"], 4);
    assert_eq!(manifest["corpus_size"], 40);
}

#[test]
fn predict_evaluate_round_trip() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred.jsonl");
    let att = dir.path().join("att.jsonl");
    let out = run(&[
        "predict",
        "--model",
        s(&t.model),
        "--instances",
        s(&t.files.instances),
        "--out",
        s(&pred),
        "--emit-attention",
        s(&att),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let ids: Vec<String> = std::fs::read_to_string(&t.files.instances)
        .unwrap()
        .lines()
        .map(|l| {
            serde_json::from_str::<Value>(l).unwrap()["id"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    let preds: Vec<Value> = std::fs::read_to_string(&pred)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(preds.len(), ids.len());
    for (p, id) in preds.iter().zip(&ids) {
        assert_eq!(p["id"].as_str().unwrap(), id);
        let score = p["clickbaitScore"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&score));
    }
    for line in std::fs::read_to_string(&att).unwrap().lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        let pairs = v["attention"].as_array().unwrap();
        assert!(!pairs.is_empty());
        let sum: f64 = pairs.iter().map(|p| p[1].as_f64().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-6);
    }

    let out = run(&["evaluate", "--pred", s(&pred), "--truth", s(&t.files.truth)]);
    assert!(out.status.success());
    let m: Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["mse", "accuracy", "precision", "recall", "f1"] {
        assert!(m[key].is_f64(), "{key}");
    }
}

fn write_preds(path: &Path, scores: &[(String, f64)]) {
    let text: String = scores
        .iter()
        .map(|(id, x)| format!("{{\"id\":\"{id}\",\"clickbaitScore\":{x}}}\n"))
        .collect();
    std::fs::write(path, text).unwrap();
}

fn truth_means(path: &Path) -> Vec<(String, f64)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            (v["id"].as_str().unwrap().to_string(), v["truthMean"].as_f64().unwrap())
        })
        .collect()
}

#[test]
fn evaluate_hand_cases() {
    let dir = tempfile::tempdir().unwrap();
    let t = trained();
    let exact = dir.path().join("exact.jsonl");
    write_preds(&exact, &truth_means(&t.files.truth));
    let out = run(&["evaluate", "--pred", s(&exact), "--truth", s(&t.files.truth)]);
    let m: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(m["mse"].as_f64().unwrap(), 0.0);

    let truth = dir.path().join("zeros.jsonl");
    std::fs::write(
        &truth,
        (0..4)
            .map(|i| format!("{{\"id\":\"z{i}\",\"truthJudgments\":[0,0,0,0,0],\"truthMean\":0,\"truthMedian\":0,\"truthMode\":0,\"truthClass\":\"no-clickbait\"}}\n"))
            .collect::<String>(),
    )
    .unwrap();
    let half = dir.path().join("half.jsonl");
    write_preds(&half, &(0..4).map(|i| (format!("z{i}"), 0.5)).collect::<Vec<_>>());
    let out = run(&["evaluate", "--pred", s(&half), "--truth", s(&truth)]);
    let m: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((m["mse"].as_f64().unwrap() - 0.25).abs() < 1e-12);

    let out = run(&["evaluate", "--pred", s(&exact), "--truth", s(&truth)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_and_data_errors() {
    let t = trained();
    let no_embeddings = run(&[
        "train",
        "--instances",
        s(&t.files.instances),
        "--truth",
        s(&t.files.truth),
        "--out",
        "/tmp/unused",
        "--seed",
        "1",
    ]);
    assert_eq!(no_embeddings.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&no_embeddings.stderr).contains("Usage"));

    assert_eq!(run(&["predict", "--model", "x", "--bogus"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{not json\n").unwrap();
    let out = run(&[
        "train",
        "--instances",
        s(&bad),
        "--truth",
        s(&t.files.truth),
        "--embeddings",
        s(&t.files.embeddings),
        "--out",
        s(&dir.path().join("m")),
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("m").exists());

    let out = run(&[
        "predict",
        "--model",
        s(&t.files.instances),
        "--instances",
        s(&t.files.instances),
        "--out",
        s(&dir.path().join("p.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gradcheck_exit_codes() {
    let ok = run(&["gradcheck", "--seed", "3", "--trials", "1"]);
    assert_eq!(ok.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["trials"], 1);
    assert!(v["worst"]["max_relative_error"].as_f64().unwrap() < 1e-4);

    let bad = run(&["gradcheck", "--seed", "3", "--trials", "1", "--corrupt-gradient"]);
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn preprocess_reads_stdin() {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = bin()
        .arg("preprocess")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"Check http://t.co/abc\nso COOL\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "check <url>\nso cool <allcaps>\n"
    );
}

#[test]
fn thread_count_does_not_change_weights() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let mut weights = Vec::new();
    for threads in ["1", "3"] {
        let out_dir = dir.path().join(threads);
        let status = bin()
            .env("ZINGEL_THREADS", threads)
            .args([
                "train",
                "--instances",
                s(&t.files.instances),
                "--truth",
                s(&t.files.truth),
                "--embeddings",
                s(&t.files.embeddings),
                "--out",
                s(&out_dir),
                "--seed",
                "5",
                "--config",
            ])
            .arg(t.model.parent().unwrap().join("cfg.toml"))
            .output()
            .unwrap();
        assert!(status.status.success());
        weights.push(std::fs::read(out_dir.join("member_2/weights.bin")).unwrap());
    }
    assert_eq!(weights[0], weights[1]);
    assert_eq!(weights[0], std::fs::read(t.model.join("member_2/weights.bin")).unwrap());

    let bad = bin()
        .env("ZINGEL_THREADS", "many")
        .args(["gradcheck", "--trials", "1"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
