//! Trades communication rounds against accuracy by varying the averaging interval.
//!
//! I = 1 is the mini-batch baseline and I = T is one-shot averaging.

use prsgd::engine::{run_pr_sgd, RunConfig};
use prsgd::metrics::{aggregate_over_seeds, Statistic};
use prsgd::problems::{make_sine_family, ParamVector};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let suite = make_sine_family(8, 4, 1.0, 0.5, 7)?;
    let t = 2048;
    println!(
        "{:>6} {:>8} {:>14} {:>12}",
        "I", "rounds", "avg |grad|^2", "peak dev"
    );
    for interval in [1, 4, 16, 64, 256, t] {
        let records = (0..8)
            .map(|seed| {
                let cfg = if interval == t {
                    RunConfig::one_shot(4, t, 0.05, ParamVector::zeros(8))
                } else {
                    RunConfig::new(4, t, 0.05, interval, ParamVector::zeros(8))
                };
                run_pr_sgd(&suite, &cfg.with_seed(seed))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let agg = aggregate_over_seeds(&records, Statistic::AvgSqGradNorm)?;
        let peak = records.iter().fold(0.0f64, |m, r| m.max(r.peak_deviation));
        let rounds = records[0].ledger.as_ref().map_or(0, |l| l.rounds);
        println!("{interval:>6} {rounds:>8} {:>14.5e} {peak:>12.3e}", agg.0);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
