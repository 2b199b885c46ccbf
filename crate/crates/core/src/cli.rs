//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 data or
//! artifact error, 3 failed internal check.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::PathBuf;

use clap::{error::ErrorKind, Args, Parser, Subcommand};
use serde::Serialize;

use crate::dataset::{load_instances, load_labelled, load_truth};
use crate::embeddings::load_pretrained_for;
use crate::error::{Error, Result};
use crate::nn::gradcheck::run_trials;
use crate::scoring::{evaluate, read_predictions, truth_mean, write_predictions, Prediction};
use crate::text::preprocess;
use crate::trainer::{train_ensemble, Ensemble, TrainConfig, ENSEMBLE_FILE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_CHECK: i32 = 3;

/// Caps the worker pool; 0 or unset means one worker per core.
pub const THREADS_ENV: &str = "ZINGEL_THREADS";

#[derive(Debug, Parser)]
#[command(name = "clickbait", version, about = "Clickbait strength scoring for tweets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the cross-validated ensemble.
    Train(TrainArgs),
    /// Score tweets with a trained ensemble.
    Predict(PredictArgs),
    /// Compare predictions with truth labels.
    Evaluate(EvaluateArgs),
    /// Check backpropagation against finite differences.
    Gradcheck(GradcheckArgs),
    /// Normalize and tokenize lines from stdin.
    Preprocess,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Instances JSONL; repeat to concatenate corpora.
    #[arg(long, required = true, num_args = 1..)]
    pub instances: Vec<PathBuf>,
    /// Truth JSONL, paired positionally with --instances.
    #[arg(long, required = true, num_args = 1..)]
    pub truth: Vec<PathBuf>,
    /// Whitespace-separated word vectors.
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// `key = value` overrides of the training defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub instances: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write per-token attention weights as JSONL.
    #[arg(long)]
    pub emit_attention: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, hide = true)]
    pub corrupt_gradient: bool,
}

/// Parses `args` (program name first), runs the command, and returns the
/// process exit code. Output goes to `stdout`; diagnostics to stderr.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    let outcome = match cli.command {
        Command::Train(a) => train(&a, stdout),
        Command::Predict(a) => predict(&a),
        Command::Evaluate(a) => evaluate_cmd(&a, stdout),
        Command::Gradcheck(a) => return gradcheck(&a, stdout),
        Command::Preprocess => preprocess_stream(io::stdin().lock(), stdout),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

fn configure_threads() -> std::result::Result<(), String> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("{THREADS_ENV} must be a non-negative integer, got {v:?}"))?,
        _ => 0,
    };
    // A pool that already exists (repeated in-process runs) is kept.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn print_json(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct MemberReport {
    member: usize,
    best_epoch: usize,
    validation_mse: f64,
}

fn train(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    if a.instances.len() != a.truth.len() {
        return Err(Error::Config(format!(
            "{} --instances files but {} --truth files",
            a.instances.len(),
            a.truth.len()
        )));
    }
    let mut config = match &a.config {
        Some(p) => TrainConfig::from_file(p)?,
        None => TrainConfig::default(),
    };
    config.seed = a.seed;

    let pairs: Vec<(PathBuf, PathBuf)> = a.instances.iter().cloned().zip(a.truth.iter().cloned()).collect();
    let corpus = load_labelled(&pairs)?;
    let wanted: HashSet<String> = corpus.iter().flat_map(|t| preprocess(&t.tweet.post_text)).collect();
    let vectors = load_pretrained_for(&a.embeddings, config.d0, &wanted)?;
    eprintln!(
        "training {} members on {} samples ({} pretrained vectors matched)",
        config.k_folds,
        corpus.len(),
        vectors.len()
    );
    let ensemble = train_ensemble(&corpus, &vectors, &config, &|m, r| {
        eprintln!(
            "member {m} epoch {} train_loss {:.6} validation_mse {:.6}",
            r.epoch, r.train_loss, r.validation_mse
        );
    })?;
    ensemble.save(&a.out)?;
    let report: Vec<MemberReport> = ensemble
        .manifest
        .members
        .iter()
        .enumerate()
        .map(|(i, m)| MemberReport {
            member: i,
            best_epoch: m.best_epoch,
            validation_mse: m.validation_mse,
        })
        .collect();
    print_json(out, &report)
}

#[derive(Serialize)]
struct AttentionLine<'a> {
    id: &'a str,
    attention: Vec<(&'a str, f64)>,
}

fn predict(a: &PredictArgs) -> Result<()> {
    if !a.model.join(ENSEMBLE_FILE).is_file() {
        return Err(Error::artifact(&a.model, format!("no {ENSEMBLE_FILE} found")));
    }
    let ensemble = Ensemble::load(&a.model)?;
    let tweets = load_instances(&a.instances)?;
    let mut preds = Vec::with_capacity(tweets.len());
    let mut attention = match &a.emit_attention {
        Some(p) => Some(BufWriter::new(File::create(p)?)),
        None => None,
    };
    for t in &tweets {
        let r = ensemble.predict_with_attention(&t.post_text)?;
        preds.push(Prediction {
            id: t.id.clone(),
            clickbait_score: truth_mean(&r.distribution),
        });
        if let Some(w) = attention.as_mut() {
            let line = AttentionLine {
                id: &t.id,
                attention: r
                    .tokens
                    .iter()
                    .map(String::as_str)
                    .zip(r.alpha.iter().copied())
                    .collect(),
            };
            serde_json::to_writer(&mut *w, &line)?;
            writeln!(w)?;
        }
    }
    if let Some(mut w) = attention {
        w.flush()?;
    }
    write_predictions(&preds, &a.out)
}

fn evaluate_cmd(a: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let preds = read_predictions(&a.pred)?;
    let truth = load_truth(&a.truth)?;
    print_json(out, &evaluate(&preds, &truth)?)
}

fn gradcheck(a: &GradcheckArgs, out: &mut dyn Write) -> i32 {
    let summary = match run_trials(a.seed, a.trials as usize, a.corrupt_gradient) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CHECK;
        }
    };
    if let Err(e) = print_json(out, &summary) {
        eprintln!("error: {e}");
        return EXIT_DATA;
    }
    eprintln!("worst relative error {:.3e}", summary.worst.max_relative_error);
    if summary.passed {
        EXIT_OK
    } else {
        EXIT_CHECK
    }
}

/// One space-joined token line per input line.
pub fn preprocess_stream(input: impl BufRead, out: &mut dyn Write) -> Result<()> {
    let mut w = BufWriter::new(out);
    for line in input.lines() {
        writeln!(w, "{}", preprocess(&line?).join(" "))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(args: &[&str]) -> i32 {
        let mut sink = Vec::new();
        run(std::iter::once("clickbait").chain(args.iter().copied()), &mut sink)
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(code(&[]), EXIT_USAGE);
        assert_eq!(code(&["bogus"]), EXIT_USAGE);
        assert_eq!(
            code(&["evaluate", "--pred", "a", "--truth", "b", "--extra"]),
            EXIT_USAGE
        );
        assert_eq!(
            code(&["train", "--instances", "i", "--truth", "t", "--out", "o", "--seed", "1"]),
            EXIT_USAGE
        );
        assert_eq!(code(&["gradcheck", "--trials", "0"]), EXIT_USAGE);
    }

    #[test]
    fn missing_files_exit_two() {
        assert_eq!(
            code(&["evaluate", "--pred", "/nonexistent/p", "--truth", "/nonexistent/t"]),
            EXIT_DATA
        );
        assert_eq!(
            code(&[
                "predict",
                "--model",
                "/nonexistent",
                "--instances",
                "x",
                "--out",
                "/nonexistent/o"
            ]),
            EXIT_DATA
        );
    }

    #[test]
    fn preprocess_lines() {
        let mut out = Vec::new();
        preprocess_stream(&b"Check http://t.co/abc\n\nHELLO world\n"[..], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "check <url>");
        assert_eq!(lines[1], "");
    }
}
