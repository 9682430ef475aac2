//! Step size, interval and bound prescribed for a given budget.

use std::fmt::Write as _;

use super::CliError;
use crate::engine::plan_interval;
use crate::metrics::{corollary1_bound, corollary1_gamma, BoundConstants};

/// Inputs of [`plan`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanInputs {
    pub iterations: u64,
    pub workers: usize,
    pub smoothness: f64,
    pub sigma: f64,
    pub grad_bound: f64,
    pub f0_minus_fstar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plan {
    pub gamma: f64,
    pub interval: u64,
    pub bound: f64,
    pub rounds: u64,
    pub rounds_every_step: u64,
}

impl Plan {
    /// Rounds at the planned interval divided by rounds at `I = 1`.
    pub fn rounds_ratio(&self) -> f64 {
        self.rounds as f64 / self.rounds_every_step as f64
    }
}

pub fn plan(p: &PlanInputs) -> Result<Plan, CliError> {
    let bad = |key: &str, message: String| CliError::Config {
        key: key.into(),
        message,
    };
    if p.workers == 0 {
        return Err(bad("N", "must be at least 1".into()));
    }
    if p.iterations < p.workers as u64 {
        return Err(bad(
            "T",
            format!(
                "need T >= N, got T = {} and N = {}",
                p.iterations, p.workers
            ),
        ));
    }
    let c = BoundConstants {
        smoothness: p.smoothness,
        sigma: p.sigma,
        grad_bound: p.grad_bound,
        workers: p.workers,
        f0_minus_fstar: p.f0_minus_fstar,
    };
    let bound = corollary1_bound(&c, p.iterations).map_err(|e| bad("constants", e.to_string()))?;
    let interval = plan_interval(p.iterations, p.workers as u64);
    Ok(Plan {
        gamma: corollary1_gamma(p.workers, p.iterations, p.smoothness),
        interval,
        bound,
        rounds: p.iterations / interval,
        rounds_every_step: p.iterations,
    })
}

/// Key-value text for the `plan` verb.
pub fn plan_report(p: &PlanInputs) -> Result<String, CliError> {
    let plan = plan(p)?;
    let mut s = String::new();
    let _ = writeln!(s, "T = {}", p.iterations);
    let _ = writeln!(s, "N = {}", p.workers);
    let _ = writeln!(s, "gamma = {}", plan.gamma);
    let _ = writeln!(s, "interval = {}", plan.interval);
    let _ = writeln!(s, "bound = {}", plan.bound);
    let _ = writeln!(s, "rounds = {}", plan.rounds);
    let _ = writeln!(s, "rounds_at_interval_1 = {}", plan.rounds_every_step);
    let _ = writeln!(s, "rounds_ratio = {}", plan.rounds_ratio());
    Ok(s)
}
