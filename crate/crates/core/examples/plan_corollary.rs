//! Step size, averaging interval and guaranteed rate for several budgets.

use prsgd::cli::{plan, PlanInputs};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    println!(
        "{:>8} {:>3} {:>10} {:>4} {:>10} {:>8} {:>7}",
        "T", "N", "gamma", "I", "bound", "rounds", "ratio"
    );
    for (t, n) in [(4096, 4), (65536, 4), (65536, 16), (1 << 20, 8), (8, 8)] {
        let p = plan(&PlanInputs {
            iterations: t,
            workers: n,
            smoothness: 1.0,
            sigma: 1.0,
            grad_bound: 1.0,
            f0_minus_fstar: 1.0,
        })?;
        println!(
            "{t:>8} {n:>3} {:>10.6} {:>4} {:>10.6} {:>8} {:>7.4}",
            p.gamma,
            p.interval,
            p.bound,
            p.rounds,
            p.rounds_ratio()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
