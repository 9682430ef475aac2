//! Executes sweeps and writes their outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::config::{Algorithm, ExperimentConfig, SweepPoint};
use super::CliError;
use crate::engine::run;
use crate::metrics::{
    lemma1_bound, lemma3_bound, mean_and_se, theorem1_bound, theorem3_bound, BoundConstants,
    BoundReport, Statistic,
};
use crate::problems::Objective;
use crate::trajectory::TrajectoryRecord;

pub const TRAJECTORY_HEADER: &str =
    "t,epoch,step,f_xbar_prev,grad_sq_xbar_prev,max_deviation,gamma,weight,rounds";

pub const SUMMARY_HEADER: &str = "point,algorithm,N,T,I,gamma,S,lengths,statistic,seeds,mean,se,\
bound,satisfied,certified,rounds,vectors_transferred,bytes,peak_deviation,deviation_bound,seed_values";

/// Aggregated results of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub index: usize,
    pub algorithm: Algorithm,
    pub workers: usize,
    pub iterations: u64,
    pub interval: Option<u64>,
    pub gamma: Option<f64>,
    pub epochs: Option<u64>,
    pub lengths: Option<Vec<u64>>,
    pub statistic: Statistic,
    pub seeds: Vec<u64>,
    /// Statistic value per seed, in seed order.
    pub values: Vec<f64>,
    pub mean: f64,
    /// Zero for a single seed.
    pub se: f64,
    pub bound: Option<BoundReport>,
    /// Why no bound applies, when `bound` is `None`.
    pub not_certified: Option<String>,
    pub rounds: u64,
    pub vectors_transferred: u64,
    pub bytes: u64,
    pub accounting: String,
    /// Largest deviation seen across seeds.
    pub peak_deviation: f64,
    pub deviation_bound: Option<f64>,
    pub wall_seconds: f64,
}

impl PointSummary {
    pub fn certified(&self) -> bool {
        self.bound.is_some()
    }

    /// Certified but the conservative measurement exceeds the bound.
    pub fn violates_bound(&self) -> bool {
        self.bound.is_some_and(|b| !b.satisfied)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepSummary {
    pub points: Vec<PointSummary>,
}

impl SweepSummary {
    pub fn violations(&self) -> usize {
        self.points.iter().filter(|p| p.violates_bound()).count()
    }
}

/// Runs every point, with seeds in parallel. With `out_dir`, writes one CSV per run.
pub fn run_sweep(
    config: &ExperimentConfig,
    out_dir: Option<&Path>,
) -> Result<SweepSummary, CliError> {
    let points = config.sweep_points()?;
    let seeds = config.seeds()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut summary = SweepSummary::default();
    for point in &points {
        let started = Instant::now();
        let records = seeds
            .par_iter()
            .map(|&seed| run(&point.suite, &point.spec_with_seed(seed)))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(dir) = out_dir {
            for (record, &seed) in records.iter().zip(&seeds) {
                let path = dir.join(trajectory_file_name(point.index, seed));
                fs::write(&path, trajectory_csv(record)).map_err(|e| CliError::io(&path, e))?;
            }
        }
        let mut s = summarize(point, &seeds, &records)?;
        s.wall_seconds = started.elapsed().as_secs_f64();
        summary.points.push(s);
    }
    Ok(summary)
}

pub fn trajectory_file_name(point: usize, seed: u64) -> String {
    format!("point{point:03}_seed{seed}.csv")
}

fn summarize(
    point: &SweepPoint,
    seeds: &[u64],
    records: &[TrajectoryRecord],
) -> Result<PointSummary, CliError> {
    let statistic = Statistic::for_kind(&records[0].kind);
    let values = records
        .iter()
        .map(|r| statistic.eval(r))
        .collect::<Result<Vec<_>, _>>()?;
    let (mean, se) = if values.len() >= 2 {
        mean_and_se(&values)
    } else {
        (values[0], 0.0)
    };
    let suite = &point.suite;
    let cert = suite.certificate();
    let f0 = suite.value(&records[0].x0);
    let consts = BoundConstants::from_certificate(cert, point.workers, f0);
    let terms = match (point.algorithm, point.gamma) {
        (Algorithm::TimeVarying, _) | (_, None) => {
            Err("no closed-form bound for time-varying schedules".to_string())
        }
        (Algorithm::Heterogeneous, Some(g)) => {
            let lengths = point.lengths.as_deref().unwrap_or_default();
            theorem3_bound(&consts, g, point.epochs.unwrap_or(0), lengths)
                .map_err(|e| e.to_string())
        }
        (_, Some(g)) => theorem1_bound(&consts, g, point.iterations, point.interval.unwrap_or(1))
            .map_err(|e| e.to_string()),
    };
    let terms = if cert.global {
        terms
    } else {
        Err("objective constants are not global".to_string())
    };
    let (bound, not_certified) = match terms {
        Ok(t) => (Some(BoundReport::new(mean, se, t)), None),
        Err(reason) => (None, Some(reason)),
    };
    let deviation_bound = match (point.algorithm, point.gamma) {
        (Algorithm::Heterogeneous, Some(g)) => Some(lemma3_bound(
            g,
            point.lengths.as_ref().map_or(1, |l| l[0]),
            cert.grad_bound,
        )),
        (Algorithm::TimeVarying, _) | (_, None) => None,
        (_, Some(g)) => Some(lemma1_bound(
            g,
            point.interval.unwrap_or(1),
            cert.grad_bound,
        )),
    };
    let ledger = records[0]
        .ledger
        .clone()
        .expect("engine records carry a ledger");
    Ok(PointSummary {
        index: point.index,
        algorithm: point.algorithm,
        workers: point.workers,
        iterations: point.iterations,
        interval: point.interval,
        gamma: point.gamma,
        epochs: point.epochs,
        lengths: point.lengths.clone(),
        statistic,
        seeds: seeds.to_vec(),
        values,
        mean,
        se,
        bound,
        not_certified,
        rounds: ledger.rounds,
        vectors_transferred: ledger.vectors_transferred,
        bytes: ledger.bytes(),
        accounting: ledger.topology.accounting().to_string(),
        peak_deviation: records.iter().fold(0.0, |m, r| m.max(r.peak_deviation)),
        deviation_bound,
        wall_seconds: 0.0,
    })
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn trajectory_csv(record: &TrajectoryRecord) -> String {
    let mut s = String::with_capacity(128 * (record.rows.len() + 1));
    s.push_str(TRAJECTORY_HEADER);
    s.push('\n');
    for r in &record.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.t,
            r.epoch,
            r.step,
            num(r.f_prev),
            num(r.grad_sq_prev),
            num(r.max_deviation()),
            num(r.gamma),
            num(r.weight),
            r.rounds
        );
    }
    s
}

pub fn summary_csv(summary: &SweepSummary) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for p in &summary.points {
        let joined = |v: &[String]| v.join(";");
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.index,
            p.algorithm,
            p.workers,
            p.iterations,
            opt(p.interval),
            p.gamma.map(num).unwrap_or_default(),
            opt(p.epochs),
            p.lengths
                .as_ref()
                .map(|l| joined(&l.iter().map(u64::to_string).collect::<Vec<_>>()))
                .unwrap_or_default(),
            p.statistic.name(),
            joined(&p.seeds.iter().map(u64::to_string).collect::<Vec<_>>()),
            num(p.mean),
            num(p.se),
            p.bound.map(|b| num(b.bound)).unwrap_or_default(),
            p.bound.map(|b| b.satisfied.to_string()).unwrap_or_default(),
            p.certified(),
            p.rounds,
            p.vectors_transferred,
            p.bytes,
            num(p.peak_deviation),
            p.deviation_bound.map(num).unwrap_or_default(),
            joined(&p.values.iter().map(|v| num(*v)).collect::<Vec<_>>()),
        );
    }
    s
}

pub fn timing_csv(summary: &SweepSummary) -> String {
    let mut s = String::from("point,wall_seconds\n");
    for p in &summary.points {
        let _ = writeln!(s, "{},{:.6}", p.index, p.wall_seconds);
    }
    s
}

/// Flat key-value report: one block per point, then slope fits.
pub fn report_text(summary: &SweepSummary) -> String {
    let mut s = String::new();
    for p in &summary.points {
        let _ = writeln!(s, "[point {}]", p.index);
        let _ = writeln!(s, "algorithm = {}", p.algorithm);
        let _ = writeln!(s, "workers = {}", p.workers);
        let _ = writeln!(s, "iterations = {}", p.iterations);
        if let Some(i) = p.interval {
            let _ = writeln!(s, "interval = {i}");
        }
        if let Some(g) = p.gamma {
            let _ = writeln!(s, "gamma = {}", num(g));
        }
        if let Some(e) = p.epochs {
            let _ = writeln!(s, "epochs = {e}");
        }
        let _ = writeln!(s, "statistic = {}", p.statistic.name());
        let _ = writeln!(s, "seeds = {}", p.seeds.len());
        match &p.bound {
            Some(b) => s.push_str(&b.to_kv()),
            None => {
                let _ = writeln!(s, "mean = {}", num(p.mean));
                let _ = writeln!(s, "standard_error = {}", num(p.se));
                let _ = writeln!(s, "certified = false");
                let _ = writeln!(s, "reason = {}", p.not_certified.as_deref().unwrap_or(""));
            }
        }
        let _ = writeln!(s, "peak_deviation = {}", num(p.peak_deviation));
        if let Some(d) = p.deviation_bound {
            let _ = writeln!(s, "deviation_bound = {}", num(d));
        }
        let _ = writeln!(s, "rounds = {}", p.rounds);
        let _ = writeln!(s, "vectors_transferred = {}", p.vectors_transferred);
        let _ = writeln!(s, "bytes = {}", p.bytes);
        let _ = writeln!(s, "accounting = {}", p.accounting);
        s.push('\n');
    }
    for axis in [super::slope::Axis::T, super::slope::Axis::N] {
        if let Ok(fits) = super::slope::fit_rate_slope(&super::slope::slope_points(summary), axis) {
            for f in fits {
                let _ = writeln!(s, "[slope vs {axis}]");
                s.push_str(&f.to_kv());
                s.push('\n');
            }
        }
    }
    s
}

/// Writes `summary.csv`, `report.txt` and `timing.csv` into `dir`.
pub fn write_summary(dir: &Path, summary: &SweepSummary) -> Result<Vec<PathBuf>, CliError> {
    let files = [
        ("summary.csv", summary_csv(summary)),
        ("report.txt", report_text(summary)),
        ("timing.csv", timing_csv(summary)),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
