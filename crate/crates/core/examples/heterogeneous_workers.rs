//! Workers with different epoch lengths on shared data.
//!
//! Slower workers take fewer local steps per epoch and stay frozen until the
//! next average. Each local step index `k` is weighted by the number of
//! workers still active at `k`.

use prsgd::engine::{run_heterogeneous, HeteroConfig, RunSetup};
use prsgd::metrics::{theorem3_bound, weighted_sq_grad_norm_hetero, BoundConstants};
use prsgd::problems::{make_logistic_family, Objective, ParamVector};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let suite = make_logistic_family(10, 4, 64, 0.1, true, 5)?;
    let gamma = 1.0 / suite.certificate().smoothness;
    let hetero = HeteroConfig::new(vec![2, 8, 4, 8], 64, gamma)?;
    println!(
        "sorted lengths {:?}, original workers {:?}",
        hetero.lengths(),
        hetero.permutation()
    );
    println!("active workers per local step {:?}", hetero.active_counts());

    let x0 = ParamVector::zeros(10);
    let record = run_heterogeneous(&suite, &hetero, &RunSetup::new(x0.clone()).with_seed(2))?;
    let consts =
        BoundConstants::from_certificate(suite.certificate(), 4, suite.value(x0.as_slice()));
    let bound = theorem3_bound(&consts, gamma, 64, hetero.lengths())?;
    println!("gradient steps = {}", hetero.gradient_steps());
    println!(
        "weighted statistic = {:.5e}, bound = {:.5e}",
        weighted_sq_grad_norm_hetero(&record)?,
        bound.total()
    );
    println!(
        "rounds = {}",
        record.ledger.as_ref().map_or(0, |l| l.rounds)
    );

    // Different data per worker breaks the shared-distribution assumption.
    let split = make_logistic_family(10, 4, 64, 0.1, false, 5)?;
    match run_heterogeneous(&split, &hetero, &RunSetup::new(x0)) {
        Err(e) => println!("split data rejected: {e}"),
        Ok(_) => return Err("split data should be rejected".into()),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
