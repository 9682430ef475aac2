//! One PR-SGD run on the sine family, compared against its convergence bound.

use prsgd::engine::{run_pr_sgd, RunConfig};
use prsgd::metrics::{avg_sq_grad_norm, lemma1_bound, theorem1_bound, BoundConstants};
use prsgd::problems::{make_sine_family, Objective, ParamVector};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (workers, dim) = (4, 8);
    let suite = make_sine_family(dim, workers, 1.0, 0.5, 7)?;
    let x0 = ParamVector::zeros(dim);
    let (t, gamma, interval) = (4096, 0.03, 8);
    let record = run_pr_sgd(
        &suite,
        &RunConfig::new(workers, t, gamma, interval, x0.clone()).with_seed(1),
    )?;

    let cert = suite.certificate();
    let consts = BoundConstants::from_certificate(cert, workers, suite.value(x0.as_slice()));
    let bound = theorem1_bound(&consts, gamma, t, interval)?;
    let stat = avg_sq_grad_norm(&record)?;
    println!("{}", suite.label());
    println!("T = {t}, I = {interval}, gamma = {gamma}");
    println!(
        "f(x0) = {:.6}, f(x_T) = {:.6}, f* = {:.6}",
        suite.value(x0.as_slice()),
        record.f_final,
        cert.f_star
    );
    println!("average squared gradient norm = {stat:.6e}");
    println!(
        "bound = {:.6e} (gap {:.3e} + deviation {:.3e} + noise {:.3e})",
        bound.total(),
        bound.initial_gap,
        bound.deviation,
        bound.noise
    );
    println!(
        "peak deviation = {:.3e}, per-step bound = {:.3e}",
        record.peak_deviation,
        lemma1_bound(gamma, interval, cert.grad_bound)
    );
    let ledger = record.ledger.as_ref().expect("ledger");
    println!("rounds = {}, bytes = {}", ledger.rounds, ledger.bytes());
    assert!(stat <= bound.total());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
