//! Compares backpropagation with central finite differences on tiny models.
//! Usage: gradient_check [trials]

use clickbait::nn::gradcheck::{finite_difference_check, random_case, run_trials, TinyModelSpec};

fn main() -> clickbait::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let (params, tweet, q) = random_case(TinyModelSpec::default(), 0);
    for step in [1e-4, 1e-5, 1e-6] {
        let r = finite_difference_check(&params, &tweet, &q, step, 0)?;
        println!(
            "step {step:e}: {} entries, worst {:.2e} in {}[{}]",
            r.entries_checked, r.max_relative_error, r.worst_tensor, r.worst_index
        );
    }
    let s = run_trials(1, trials, false)?;
    println!(
        "{trials} trials: passed {} (worst {:.2e})",
        s.passed, s.worst.max_relative_error
    );
    Ok(())
}
