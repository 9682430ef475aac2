//! Every example runs to completion.

#[path = "../examples/pr_sgd_basic.rs"]
mod pr_sgd_basic;

#[path = "../examples/interval_sweep.rs"]
mod interval_sweep;

#[path = "../examples/time_varying_schedule.rs"]
mod time_varying_schedule;

#[path = "../examples/heterogeneous_workers.rs"]
mod heterogeneous_workers;

#[path = "../examples/plan_corollary.rs"]
mod plan_corollary;

#[path = "../examples/rate_slope.rs"]
mod rate_slope;

#[path = "../examples/experiment_config.rs"]
mod experiment_config;

#[path = "../examples/communication_topologies.rs"]
mod communication_topologies;

#[path = "../examples/oracle_suite.rs"]
mod oracle_suite;

#[test]
fn pr_sgd_basic_runs() {
    pr_sgd_basic::run_example().unwrap();
}

#[test]
fn interval_sweep_runs() {
    interval_sweep::run_example().unwrap();
}

#[test]
fn time_varying_schedule_runs() {
    time_varying_schedule::run_example().unwrap();
}

#[test]
fn heterogeneous_workers_runs() {
    heterogeneous_workers::run_example().unwrap();
}

#[test]
fn plan_corollary_runs() {
    plan_corollary::run_example().unwrap();
}

#[test]
fn rate_slope_runs() {
    rate_slope::run_example().unwrap();
}

#[test]
fn experiment_config_runs() {
    experiment_config::run_example().unwrap();
}

#[test]
fn communication_topologies_runs() {
    communication_topologies::run_example().unwrap();
}

#[test]
fn oracle_suite_passes() {
    assert!(oracle_suite::run_example().unwrap());
}
