//! Communication accounting for a parameter server and a ring all-reduce.
//!
//! Both produce bitwise identical trajectories; only the ledgers differ.

use prsgd::comms::TopologyKind;
use prsgd::engine::{run_pr_sgd, Execution, RunConfig};
use prsgd::problems::{make_sine_family, ParamVector};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let suite = make_sine_family(16, 8, 1.0, 0.5, 7)?;
    let base = RunConfig::new(8, 1000, 0.05, 10, ParamVector::zeros(16)).with_seed(4);
    let mut finals = Vec::new();
    for topology in [TopologyKind::ParameterServer, TopologyKind::AllReduce] {
        let record = run_pr_sgd(
            &suite,
            &base
                .clone()
                .with_topology(topology)
                .with_execution(Execution::Threaded { threads: 4 }),
        )?;
        let l = record.ledger.as_ref().expect("ledger");
        println!(
            "{:?}: rounds {}, messages {}, vectors {}, bytes {}",
            topology,
            l.rounds,
            l.messages,
            l.vectors_transferred,
            l.bytes()
        );
        println!("  {}", l.topology.accounting());
        finals.push(record.x_final);
    }
    assert_eq!(finals[0], finals[1]);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
