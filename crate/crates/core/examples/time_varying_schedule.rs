//! Epoch schedule with growing lengths and shrinking step sizes.
//!
//! Epoch `s` runs `ceil(s^(1/3) / N)` local steps at rate `N / s^(2/3)`.
//! The reported statistic weights each step by its rate.

use prsgd::engine::{compute_theorem2_schedule, run_time_varying, RunSetup};
use prsgd::metrics::weighted_sq_grad_norm_tv;
use prsgd::problems::{make_sine_family, Objective, ParamVector};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let workers = 4;
    let suite = make_sine_family(8, workers, 1.0, 0.5, 7)?;
    let inverse_l = 1.0 / suite.certificate().smoothness;
    for epochs in [64, 512, 4096] {
        let schedule = compute_theorem2_schedule(workers as u64, epochs)?;
        let first_safe = schedule
            .epochs
            .iter()
            .position(|e| e.gamma <= inverse_l)
            .map_or(0, |i| i + 1);
        let record = run_time_varying(
            &suite,
            &schedule,
            &RunSetup::new(ParamVector::zeros(8)).with_seed(3),
        )?;
        let last = schedule.epochs.last().expect("non-empty");
        println!(
            "S = {epochs:>5}: T = {:>6}, last epoch K = {}, gamma = {:.5}, gamma <= 1/L from s = {first_safe}, weighted stat = {:.5e}",
            schedule.total_iterations(),
            last.length,
            last.gamma,
            weighted_sq_grad_norm_tv(&record)?
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
