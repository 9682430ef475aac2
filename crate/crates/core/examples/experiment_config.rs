//! Full experiment from a TOML config: per-run CSVs, summary and report.
//!
//! Writes under the system temp directory unless `PRSGD_OUT_DIR` is set.

use prsgd::cli::{resolve_out_dir, run_sweep, write_summary, ExperimentConfig};

const CONFIG: &str = r#"
[objective]
family = "sine"
dim = 8
noise_halfwidth = 0.5

[run]
algorithm = "pr_sgd"
workers = [2, 4]
iterations = 1024
interval = [1, 8]
gamma = "corollary_capped"

[seeds]
start = 100
count = 4

[output]
certify = true
"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig::from_toml(CONFIG)?;
    let base = std::env::temp_dir().join("prsgd-example");
    let dir = resolve_out_dir(&config.output.dir, Some(&base));
    let summary = run_sweep(&config, Some(&dir))?;
    for path in write_summary(&dir, &summary)? {
        println!("wrote {}", path.display());
    }
    print!("{}", std::fs::read_to_string(dir.join("summary.csv"))?);
    assert_eq!(summary.violations(), 0);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
