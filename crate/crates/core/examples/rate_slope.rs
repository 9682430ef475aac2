//! Log-log slope of the statistic against T, with planned step size and interval.

use prsgd::cli::{fit_rate_slope, run_sweep, slope_points, Axis, ExperimentConfig};

const CONFIG: &str = r#"
[objective]
family = "sine"
dim = 8
noise_halfwidth = 2.0

[run]
algorithm = "pr_sgd"
workers = 4
iterations = [1024, 4096, 16384]
interval = "plan"
gamma = "corollary"
record_every = 256

[seeds]
count = 8
"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let summary = run_sweep(&ExperimentConfig::from_toml(CONFIG)?, None)?;
    for p in &summary.points {
        println!(
            "T = {:>6}, I = {:?}, mean = {:.5e} +- {:.1e}",
            p.iterations,
            p.interval.unwrap_or(0),
            p.mean,
            p.se
        );
    }
    for fit in fit_rate_slope(&slope_points(&summary), Axis::T)? {
        print!("{}", fit.to_kv());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
