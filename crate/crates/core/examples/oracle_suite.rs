//! Runs every oracle and negative control, printing one line per check.

use prsgd::oracles::{verdict_table, verification_suite};

pub fn run_example() -> Result<bool, Box<dyn std::error::Error>> {
    let verdicts = verification_suite()?;
    print!("{}", verdict_table(&verdicts));
    for v in verdicts.iter().filter(|v| !v.passed) {
        println!("failed: {} ({})", v.name, v.details);
    }
    Ok(verdicts.iter().all(|v| v.passed))
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    if !run_example()? {
        std::process::exit(3);
    }
    Ok(())
}
