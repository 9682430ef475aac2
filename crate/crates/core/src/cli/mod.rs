//! Experiment runner behind the `prsgd` binary.
//!
//! Verbs map onto [`run_experiment`], [`plan_report`], [`verify`] and
//! [`slope_report`]. Each returns an [`Outcome`] or a [`CliError`], both of
//! which carry the process exit code.

pub mod config;
pub mod plan;
pub mod slope;
pub mod sweep;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::engine::EngineError;
use crate::metrics::MetricsError;
use crate::oracles::{verdict_table, verdicts_csv, verification_suite, OracleError, OracleVerdict};

pub use config::{Algorithm, ExperimentConfig, SweepPoint};
pub use plan::{plan, plan_report, Plan, PlanInputs};
pub use slope::{fit_rate_slope, read_slope_points, slope_points, Axis, SlopeFit, SlopePoint};
pub use sweep::{run_sweep, write_summary, PointSummary, SweepSummary};

pub const EXIT_OK: i32 = 0;
/// Failures that are neither config, oracle nor bound related (I/O, divergence).
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ORACLE: i32 = 3;
pub const EXIT_BOUND: i32 = 4;

/// Overrides the output directory named in a config, and the default for `verify`.
pub const OUT_DIR_ENV: &str = "PRSGD_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("malformed summary: {0}")]
    Summary(String),
    #[error("slope fit: {0}")]
    Slope(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Summary(_) | CliError::Slope(_) => EXIT_CONFIG,
            CliError::Oracle(_) => EXIT_ORACLE,
            CliError::Io { .. } | CliError::Engine(_) | CliError::Metrics(_) => EXIT_RUNTIME,
        }
    }
}

/// What a verb produced: text for stdout and the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: String,
    pub exit_code: i32,
    pub out_dir: Option<PathBuf>,
}

/// The environment override if set and non-empty, else `configured`.
///
/// Relative configured paths are taken relative to `base`.
pub fn resolve_out_dir(configured: &str, base: Option<&Path>) -> PathBuf {
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(dir);
    }
    let p = PathBuf::from(configured);
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p,
    }
}

/// Loads, validates and runs a config, then writes all outputs.
///
/// Exit code is [`EXIT_BOUND`] when `output.certify` is set and a certified
/// point misses its bound.
pub fn run_experiment(config_path: &Path) -> Result<Outcome, CliError> {
    let config = ExperimentConfig::load(config_path)?;
    let out_dir = resolve_out_dir(&config.output.dir, config_path.parent());
    log::info!("writing to {}", out_dir.display());
    let summary = run_sweep(&config, Some(&out_dir))?;
    write_summary(&out_dir, &summary)?;
    let violations = summary.violations();
    let mut report = String::new();
    for p in &summary.points {
        let status = match (&p.bound, p.violates_bound()) {
            (None, _) => "uncertified",
            (Some(_), false) => "ok",
            (Some(_), true) => "VIOLATED",
        };
        let _ = writeln!(
            report,
            "point {:03} {} N={} T={} mean={:.6e} se={:.3e} {status}",
            p.index, p.algorithm, p.workers, p.iterations, p.mean, p.se
        );
    }
    let _ = writeln!(
        report,
        "{} points, {violations} bound violations",
        summary.points.len()
    );
    Ok(Outcome {
        report,
        exit_code: sweep_exit_code(&summary, config.output.certify),
        out_dir: Some(out_dir),
    })
}

/// [`EXIT_BOUND`] if `certify` is set and some certified point misses its bound.
pub fn sweep_exit_code(summary: &SweepSummary, certify: bool) -> i32 {
    if certify && summary.violations() > 0 {
        EXIT_BOUND
    } else {
        EXIT_OK
    }
}

pub fn verdicts_exit_code(verdicts: &[OracleVerdict]) -> i32 {
    if verdicts.iter().all(|v| v.passed) {
        EXIT_OK
    } else {
        EXIT_ORACLE
    }
}

/// Runs the oracle suite. Writes `verdicts.csv` when `out_dir` is given.
pub fn verify(out_dir: Option<&Path>) -> Result<Outcome, CliError> {
    let verdicts = verification_suite()?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join("verdicts.csv");
        std::fs::write(&path, verdicts_csv(&verdicts)).map_err(|e| CliError::io(&path, e))?;
    }
    let failed = verdicts.iter().filter(|v| !v.passed).count();
    let mut report = verdict_table(&verdicts);
    let _ = writeln!(report, "{} checks, {failed} failed", verdicts.len());
    Ok(Outcome {
        report,
        exit_code: verdicts_exit_code(&verdicts),
        out_dir: out_dir.map(Path::to_path_buf),
    })
}

/// Fits slopes along `axis` from a `summary.csv` written by [`run_experiment`].
pub fn slope_report(summary_path: &Path, axis: Axis) -> Result<Outcome, CliError> {
    let points = read_slope_points(summary_path)?;
    let fits = fit_rate_slope(&points, axis)?;
    let mut report = String::new();
    for f in &fits {
        let _ = writeln!(report, "[slope vs {axis}]");
        report.push_str(&f.to_kv());
        report.push('\n');
    }
    Ok(Outcome {
        report,
        exit_code: EXIT_OK,
        out_dir: None,
    })
}
