//! Independent checks of the objectives, the engine and the statistics.
//!
//! Each oracle returns an [`OracleVerdict`]. The fixtures at the bottom
//! ([`Tampered`], [`ConstantObjective`]) exist so that every oracle can be
//! shown to fail on a deliberately broken input.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{run, run_pr_sgd, run_pr_sgd_with_streams, EngineError, RunConfig, RunSpec};
use crate::metrics::{avg_sq_grad_norm, lemma1_bound, mean_and_se};
use crate::problems::{random_point, ConstantCertificate, Objective};
use crate::stream::WorkerStream;
use crate::trajectory::TrajectoryRecord;

/// Largest number of noise paths [`small_instance_exhaustive`] will walk.
pub const MAX_ENUMERATED_PATHS: u64 = 729;
/// Central-difference step. Balances `O(h²)` truncation against `O(ε/h)`
/// rounding for O(1)-scaled objectives in 64-bit arithmetic.
pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("noise is not discrete; exhaustive enumeration needs finitely many atoms")]
    ContinuousNoise,
    #[error("{paths} noise paths exceed the enumeration cap of {cap}")]
    TooManyPaths { paths: u64, cap: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleVerdict {
    pub name: String,
    pub passed: bool,
    /// The oracle's error measure; `passed` iff it is within `tolerance`.
    pub error: f64,
    pub tolerance: f64,
    pub details: String,
}

impl OracleVerdict {
    fn judge(name: impl Into<String>, error: f64, tolerance: f64, details: String) -> Self {
        Self {
            name: name.into(),
            passed: error <= tolerance,
            error,
            tolerance,
            details,
        }
    }

    /// Wraps a check that is expected to fail.
    pub fn negative_control(inner: OracleVerdict) -> Self {
        Self {
            name: format!("negative control: {}", inner.name),
            passed: !inner.passed,
            details: format!(
                "inner check {} ({})",
                if inner.passed { "passed" } else { "failed" },
                inner.details
            ),
            ..inner
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Central differences of every component `f_i` and of `f` at random points.
///
/// Error is `‖fd − ∇‖ / max(‖∇‖, 1)`, maximised over points and components.
pub fn finite_diff_check(suite: &dyn Objective, points: usize, h: f64, seed: u64) -> OracleVerdict {
    let name = format!("finite differences on {}", suite.label());
    if !(h > 0.0) {
        return OracleVerdict::judge(
            name,
            f64::INFINITY,
            FD_TOLERANCE,
            format!("step {h} is not positive"),
        );
    }
    let dim = suite.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grad = vec![0.0; dim];
    let mut fd = vec![0.0; dim];
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for p in 0..points {
        let x = random_point(&mut rng, dim);
        let mut probe = x.clone();
        // component index `workers` stands for the full objective
        for c in 0..=suite.workers() {
            let eval = |y: &[f64]| {
                if c == suite.workers() {
                    suite.value(y)
                } else {
                    suite.component_value(c, y)
                }
            };
            if c == suite.workers() {
                suite.grad(&x, &mut grad);
            } else {
                suite.component_grad(c, &x, &mut grad);
            }
            for j in 0..dim {
                probe[j] = x[j] + h;
                let up = eval(&probe);
                probe[j] = x[j] - h;
                let down = eval(&probe);
                probe[j] = x[j];
                fd[j] = (up - down) / (2.0 * h);
            }
            let diff: Vec<f64> = fd.iter().zip(&grad).map(|(a, b)| a - b).collect();
            let err = norm(&diff) / norm(&grad).max(1.0);
            if err > worst || worst_at.is_empty() {
                worst = worst.max(err);
                worst_at = format!("point {p}, component {c}");
            }
        }
    }
    OracleVerdict::judge(
        name,
        worst,
        FD_TOLERANCE,
        format!("max relative error {worst:.3e} at {worst_at} (h = {h:e}, {points} points)"),
    )
}

/// Per-coordinate sample means of `∇F_i(x; ζ)` against `∇f_i(x)`.
///
/// Error is the largest `|mean − ∇f_i| / SE`; tolerance 5.
pub fn unbiasedness_check(
    suite: &dyn Objective,
    points: usize,
    samples: usize,
    seed: u64,
) -> OracleVerdict {
    let dim = suite.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = vec![0.0; dim];
    let mut exact = vec![0.0; dim];
    let mut worst = 0.0f64;
    for p in 0..points {
        let x = random_point(&mut rng, dim);
        for w in 0..suite.workers() {
            suite.component_grad(w, &x, &mut exact);
            let mut stream = WorkerStream::seeded(seed ^ ((p as u64) << 32), w);
            let mut sum = vec![0.0; dim];
            let mut sum_sq = vec![0.0; dim];
            for _ in 0..samples {
                suite.sample_grad(w, &x, &mut stream, &mut g);
                for j in 0..dim {
                    let d = g[j] - exact[j];
                    sum[j] += d;
                    sum_sq[j] += d * d;
                }
            }
            let n = samples as f64;
            for j in 0..dim {
                let mean = sum[j] / n;
                let var = ((sum_sq[j] - n * mean * mean) / (n - 1.0)).max(0.0);
                let se = (var / n).sqrt();
                let z = if se > 0.0 {
                    mean.abs() / se
                } else if mean.abs() <= 1e-12 * exact[j].abs().max(1.0) {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(z);
            }
        }
    }
    OracleVerdict::judge(
        format!("unbiased gradients on {}", suite.label()),
        worst,
        5.0,
        format!("max |bias|/SE = {worst:.3} over {points} points x {samples} samples"),
    )
}

/// Empirical `E‖∇F_i − ∇f_i‖²` against `σ²` (5% allowance for sampling).
pub fn variance_check(
    suite: &dyn Objective,
    points: usize,
    samples: usize,
    seed: u64,
) -> OracleVerdict {
    let dim = suite.dim();
    let sigma_sq = suite.certificate().sigma_sq();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = vec![0.0; dim];
    let mut exact = vec![0.0; dim];
    let mut worst = 0.0f64;
    for p in 0..points {
        let x = random_point(&mut rng, dim);
        for w in 0..suite.workers() {
            suite.component_grad(w, &x, &mut exact);
            let mut stream = WorkerStream::seeded(seed ^ ((p as u64) << 32), w);
            let mut acc = 0.0;
            for _ in 0..samples {
                suite.sample_grad(w, &x, &mut stream, &mut g);
                acc += g
                    .iter()
                    .zip(&exact)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
            }
            worst = worst.max(acc / samples as f64);
        }
    }
    let ratio = if sigma_sq > 0.0 {
        worst / sigma_sq
    } else if worst == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    OracleVerdict::judge(
        format!("variance bound on {}", suite.label()),
        ratio,
        1.05,
        format!("max empirical variance {worst:.6} vs sigma^2 = {sigma_sq:.6}"),
    )
}

/// Every sampled `‖∇F_i(x; ζ)‖` against `G`. Error is `max ‖G_i‖ / G`.
pub fn grad_bound_check(
    suite: &dyn Objective,
    points: usize,
    samples: usize,
    seed: u64,
) -> OracleVerdict {
    let dim = suite.dim();
    let bound = suite.certificate().grad_bound;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = vec![0.0; dim];
    let mut worst = 0.0f64;
    for p in 0..points {
        let x = random_point(&mut rng, dim);
        for w in 0..suite.workers() {
            let mut stream = WorkerStream::seeded(seed ^ ((p as u64) << 32), w);
            for _ in 0..samples {
                suite.sample_grad(w, &x, &mut stream, &mut g);
                worst = worst.max(norm(&g));
            }
        }
    }
    OracleVerdict::judge(
        format!("per-sample gradient bound on {}", suite.label()),
        worst / bound,
        1.0 + 1e-12,
        format!("max sampled norm {worst:.6} vs G = {bound:.6}"),
    )
}

/// `‖∇f_i(x) − ∇f_i(y)‖ / ‖x − y‖` against `L`, at distant and nearby pairs.
pub fn smoothness_check(suite: &dyn Objective, pairs: usize, seed: u64) -> OracleVerdict {
    let dim = suite.dim();
    let l = suite.certificate().smoothness;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gx = vec![0.0; dim];
    let mut gy = vec![0.0; dim];
    let mut worst = 0.0f64;
    for p in 0..pairs {
        let x = random_point(&mut rng, dim);
        let mut y = random_point(&mut rng, dim);
        if p % 2 == 1 {
            for (yj, xj) in y.iter_mut().zip(&x) {
                *yj = xj + 1e-3 * *yj;
            }
        }
        let dx = norm(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
        if dx == 0.0 {
            continue;
        }
        for w in 0..suite.workers() {
            suite.component_grad(w, &x, &mut gx);
            suite.component_grad(w, &y, &mut gy);
            let dg = norm(&gx.iter().zip(&gy).map(|(a, b)| a - b).collect::<Vec<_>>());
            worst = worst.max(dg / dx);
        }
    }
    OracleVerdict::judge(
        format!("smoothness on {}", suite.label()),
        worst / l,
        1.0 + 1e-9,
        format!("max gradient difference quotient {worst:.6} vs L = {l:.6}"),
    )
}

/// Runs two configurations and compares their node-average trajectories bit for bit.
pub fn replay_equivalence(
    name: &str,
    suite: &dyn Objective,
    a: &RunSpec,
    b: &RunSpec,
) -> Result<OracleVerdict, OracleError> {
    let ra = run(suite, a)?;
    let rb = run(suite, b)?;
    Ok(compare_trajectories(name, &ra, &rb))
}

/// Bitwise comparison of recorded `x̄` snapshots and the final `x̄`.
///
/// Error is the number of differing coordinates (a length mismatch counts as infinite).
pub fn compare_trajectories(
    name: &str,
    a: &TrajectoryRecord,
    b: &TrajectoryRecord,
) -> OracleVerdict {
    if a.rows.len() != b.rows.len() || a.stride != b.stride || a.x_final.len() != b.x_final.len() {
        return OracleVerdict::judge(
            name,
            f64::INFINITY,
            0.0,
            format!("shapes differ: {} vs {} rows", a.rows.len(), b.rows.len()),
        );
    }
    let mut mismatches = 0u64;
    let mut max_abs = 0.0f64;
    let pairs = a
        .rows
        .iter()
        .zip(&b.rows)
        .map(|(ra, rb)| (&ra.x_bar_prev, &rb.x_bar_prev))
        .chain(std::iter::once((&a.x_final, &b.x_final)));
    for (xa, xb) in pairs {
        for (u, v) in xa.iter().zip(xb) {
            if u.to_bits() != v.to_bits() {
                mismatches += 1;
                max_abs = max_abs.max((u - v).abs());
            }
        }
    }
    OracleVerdict::judge(
        name,
        mismatches as f64,
        0.0,
        format!(
            "{} snapshots compared, {mismatches} coordinates differ (max |diff| {max_abs:.3e})",
            a.rows.len() + 1
        ),
    )
}

/// Exact expectations of a tiny run, by walking every noise realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactExpectations {
    pub paths: u64,
    /// `deviation[t-1][i] = E‖x̄^t − x_i^t‖²`.
    pub deviation: Vec<Vec<f64>>,
    /// `grad_sq[t] = E‖∇f(x̄^t)‖²` for `t = 0..=T`.
    pub grad_sq: Vec<f64>,
}

/// Number of noise paths for `config` on `suite`, one draw per worker step.
pub fn path_count(suite: &dyn Objective, config: &RunConfig) -> Result<u64, OracleError> {
    let k = suite.noise_atoms().ok_or(OracleError::ContinuousNoise)? as u64;
    let draws = config.workers as u64 * config.iterations;
    let mut paths = 1u64;
    for _ in 0..draws {
        paths = paths.saturating_mul(k);
        if paths > MAX_ENUMERATED_PATHS {
            return Err(OracleError::TooManyPaths {
                paths,
                cap: MAX_ENUMERATED_PATHS,
            });
        }
    }
    Ok(paths)
}

/// Enumerates all `k^{N·T}` equally likely noise paths.
pub fn enumerate_expectations(
    suite: &dyn Objective,
    config: &RunConfig,
) -> Result<ExactExpectations, OracleError> {
    let paths = path_count(suite, config)?;
    let k = suite.noise_atoms().ok_or(OracleError::ContinuousNoise)? as u64;
    let n = config.workers;
    let t_max = config.iterations as usize;
    let config = config.clone().with_record_every(1);
    let mut deviation = vec![vec![0.0; n]; t_max];
    let mut grad_sq = vec![0.0; t_max + 1];
    for p in 0..paths {
        let mut code = p;
        let streams = (0..n)
            .map(|_| {
                let values = (0..t_max)
                    .map(|_| {
                        let idx = code % k;
                        code /= k;
                        (idx as f64 + 0.5) / k as f64
                    })
                    .collect();
                WorkerStream::scripted(values)
            })
            .collect();
        let r = run_pr_sgd_with_streams(suite, &config, streams)?;
        accumulate(&r, &mut deviation, &mut grad_sq);
    }
    let scale = 1.0 / paths as f64;
    deviation.iter_mut().flatten().for_each(|d| *d *= scale);
    grad_sq.iter_mut().for_each(|g| *g *= scale);
    Ok(ExactExpectations {
        paths,
        deviation,
        grad_sq,
    })
}

fn accumulate(r: &TrajectoryRecord, deviation: &mut [Vec<f64>], grad_sq: &mut [f64]) {
    for (t, row) in r.rows.iter().enumerate() {
        for (d, v) in deviation[t].iter_mut().zip(&row.deviations) {
            *d += v;
        }
        grad_sq[t] += row.grad_sq_prev;
    }
    grad_sq[r.rows.len()] += r.grad_sq_final;
}

/// Exact expectations against Monte-Carlo estimates (within 3 SE) and the
/// exact expected deviations against `4γ²I²G²`.
///
/// Error is the larger of `max z / 3` and `max E[dev] / bound`; tolerance 1.
pub fn small_instance_exhaustive(
    suite: &dyn Objective,
    config: &RunConfig,
    mc_runs: usize,
    seed: u64,
) -> Result<OracleVerdict, OracleError> {
    let exact = enumerate_expectations(suite, config)?;
    let n = config.workers;
    let t_max = config.iterations as usize;
    let mut dev_samples = vec![vec![Vec::with_capacity(mc_runs); n]; t_max];
    let mut grad_samples = vec![Vec::with_capacity(mc_runs); t_max + 1];
    for r in 0..mc_runs {
        let rec = run_pr_sgd(
            suite,
            &config
                .clone()
                .with_seed(seed + r as u64)
                .with_record_every(1),
        )?;
        let mut dev = vec![vec![0.0; n]; t_max];
        let mut gs = vec![0.0; t_max + 1];
        accumulate(&rec, &mut dev, &mut gs);
        for t in 0..t_max {
            for i in 0..n {
                dev_samples[t][i].push(dev[t][i]);
            }
        }
        for (t, g) in gs.into_iter().enumerate() {
            grad_samples[t].push(g);
        }
    }
    let z = |samples: &[f64], exact: f64| {
        let (mean, se) = mean_and_se(samples);
        // deterministic quantities: SE is pure rounding noise
        if (mean - exact).abs() <= 1e-12 * exact.abs().max(1.0) {
            0.0
        } else if se > 0.0 {
            (mean - exact).abs() / se
        } else {
            f64::INFINITY
        }
    };
    let mut worst_z = 0.0f64;
    for t in 0..t_max {
        for i in 0..n {
            worst_z = worst_z.max(z(&dev_samples[t][i], exact.deviation[t][i]));
        }
    }
    for (t, g) in exact.grad_sq.iter().enumerate() {
        worst_z = worst_z.max(z(&grad_samples[t], *g));
    }
    let bound = lemma1_bound(
        config.gamma,
        config.interval,
        suite.certificate().grad_bound,
    );
    let worst_dev = exact
        .deviation
        .iter()
        .flatten()
        .fold(0.0f64, |m, d| m.max(*d));
    let ratio = if bound > 0.0 {
        worst_dev / bound
    } else if worst_dev == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(OracleVerdict::judge(
        format!(
            "exhaustive expectations on {} (N={}, T={}, I={})",
            suite.label(),
            n,
            config.iterations,
            config.interval
        ),
        (worst_z / 3.0).max(ratio),
        1.0,
        format!(
            "{} paths; max |MC - exact|/SE = {worst_z:.3} over {mc_runs} runs; max E[dev] = {worst_dev:.6e} vs bound {bound:.6e}",
            exact.paths
        ),
    ))
}

/// Recomputes `‖∇f(x̄)‖²` at every stored snapshot and the running average.
pub fn recompute_statistic(suite: &dyn Objective, record: &TrajectoryRecord) -> OracleVerdict {
    let name = format!("recomputed statistic on {}", suite.label());
    if !record.is_complete() {
        return OracleVerdict::judge(
            name,
            f64::INFINITY,
            0.0,
            "record is strided; nothing to recompute".into(),
        );
    }
    let mut scratch = vec![0.0; suite.dim()];
    let mut worst = 0.0f64;
    let mut sum = 0.0;
    for row in &record.rows {
        let g = suite.grad_norm_sq(&row.x_bar_prev, &mut scratch);
        worst = worst.max((g - row.grad_sq_prev).abs());
        sum += g;
    }
    let recomputed = sum / record.rows.len() as f64;
    let reported = avg_sq_grad_norm(record).unwrap_or(f64::NAN);
    let err = worst.max((recomputed - reported).abs());
    OracleVerdict::judge(
        name,
        if err.is_nan() { f64::INFINITY } else { err },
        0.0,
        format!("reported {reported:.16e}, recomputed {recomputed:.16e}"),
    )
}

/// Fixed-width table, one verdict per line.
pub fn verdict_table(verdicts: &[OracleVerdict]) -> String {
    let width = verdicts
        .iter()
        .map(|v| v.name.len())
        .max()
        .unwrap_or(4)
        .max(4);
    let mut s = format!(
        "{:<width$}  result  {:>12}  {:>10}\n",
        "name", "error", "tolerance"
    );
    for v in verdicts {
        let _ = writeln!(
            s,
            "{:<width$}  {:<6}  {:>12.4e}  {:>10.3e}",
            v.name,
            if v.passed { "PASS" } else { "FAIL" },
            v.error,
            v.tolerance
        );
    }
    s
}

/// `name,passed,error,tolerance` records with a header.
pub fn verdicts_csv(verdicts: &[OracleVerdict]) -> String {
    let mut s = String::from("name,passed,error,tolerance\n");
    for v in verdicts {
        let _ = writeln!(
            s,
            "\"{}\",{},{:.16e},{:.16e}",
            v.name.replace('"', "'"),
            v.passed,
            v.error,
            v.tolerance
        );
    }
    s
}

// ---------------------------------------------------------------------------
// Fixtures

/// What a [`Tampered`] objective breaks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tamper {
    /// Analytic component gradients scaled by `1 + eps`.
    CorruptGradient(f64),
    /// A constant added to every stochastic gradient coordinate.
    BiasNoise(f64),
    /// `σ` scaled by the factor.
    UnderstateSigma(f64),
    /// `G` scaled by the factor.
    UnderstateGradBound(f64),
    /// `L` scaled by the factor.
    UnderstateSmoothness(f64),
}

/// An objective with one property deliberately broken.
pub struct Tampered<'a> {
    inner: &'a dyn Objective,
    tamper: Tamper,
    certificate: ConstantCertificate,
}

impl<'a> Tampered<'a> {
    pub fn new(inner: &'a dyn Objective, tamper: Tamper) -> Self {
        let mut certificate = *inner.certificate();
        match tamper {
            Tamper::UnderstateSigma(f) => certificate.sigma *= f,
            Tamper::UnderstateGradBound(f) => certificate.grad_bound *= f,
            Tamper::UnderstateSmoothness(f) => certificate.smoothness *= f,
            _ => {}
        }
        Self {
            inner,
            tamper,
            certificate,
        }
    }
}

impl Objective for Tampered<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn workers(&self) -> usize {
        self.inner.workers()
    }
    fn certificate(&self) -> &ConstantCertificate {
        &self.certificate
    }
    fn identical_distributions(&self) -> bool {
        self.inner.identical_distributions()
    }
    fn noise_atoms(&self) -> Option<usize> {
        self.inner.noise_atoms()
    }
    fn label(&self) -> String {
        format!("{} [{:?}]", self.inner.label(), self.tamper)
    }
    fn component_value(&self, worker: usize, x: &[f64]) -> f64 {
        self.inner.component_value(worker, x)
    }
    fn component_grad(&self, worker: usize, x: &[f64], out: &mut [f64]) {
        self.inner.component_grad(worker, x, out);
        if let Tamper::CorruptGradient(eps) = self.tamper {
            out.iter_mut().for_each(|g| *g *= 1.0 + eps);
        }
    }
    fn sample_grad(&self, worker: usize, x: &[f64], stream: &mut WorkerStream, out: &mut [f64]) {
        self.inner.sample_grad(worker, x, stream, out);
        if let Tamper::BiasNoise(b) = self.tamper {
            out.iter_mut().for_each(|g| *g += b);
        }
    }
}

/// `f_i ≡ c`: zero gradients everywhere, no noise.
#[derive(Debug, Clone)]
pub struct ConstantObjective {
    dim: usize,
    workers: usize,
    value: f64,
    certificate: ConstantCertificate,
}

impl ConstantObjective {
    pub fn new(dim: usize, workers: usize, value: f64) -> Self {
        Self {
            dim,
            workers,
            value,
            certificate: ConstantCertificate {
                smoothness: 1.0,
                sigma: 0.0,
                grad_bound: 0.0,
                f_star: value,
                f_star_is_exact: true,
                global: true,
            },
        }
    }
}

impl Objective for ConstantObjective {
    fn dim(&self) -> usize {
        self.dim
    }
    fn workers(&self) -> usize {
        self.workers
    }
    fn certificate(&self) -> &ConstantCertificate {
        &self.certificate
    }
    fn identical_distributions(&self) -> bool {
        true
    }
    fn noise_atoms(&self) -> Option<usize> {
        Some(1)
    }
    fn label(&self) -> String {
        format!("constant(m={}, N={})", self.dim, self.workers)
    }
    fn component_value(&self, _worker: usize, _x: &[f64]) -> f64 {
        self.value
    }
    fn component_grad(&self, _worker: usize, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn sample_grad(&self, _worker: usize, _x: &[f64], _stream: &mut WorkerStream, out: &mut [f64]) {
        out.fill(0.0);
    }
}

// ---------------------------------------------------------------------------
// The full suite

fn neg(v: OracleVerdict) -> OracleVerdict {
    OracleVerdict::negative_control(v)
}

/// Every oracle on the built-in families, each followed by its negative control.
pub fn verification_suite() -> Result<Vec<OracleVerdict>, OracleError> {
    use crate::comms::TopologyKind;
    use crate::engine::{EpochSchedule, Execution, HeteroConfig, RunSetup};
    use crate::problems::{
        make_logistic_family, make_sine_family, sine_family_with_phases, NoiseModel, ParamVector,
    };

    let sine = make_sine_family(8, 4, 1.0, 0.5, 1).map_err(EngineError::from)?;
    let logistic = make_logistic_family(10, 4, 64, 0.1, false, 3).map_err(EngineError::from)?;
    let constant = ConstantObjective::new(3, 2, 1.5);
    let mut out = Vec::new();

    out.push(finite_diff_check(&sine, 20, FD_STEP, 11));
    out.push(finite_diff_check(&logistic, 20, FD_STEP, 12));
    out.push(finite_diff_check(&constant, 5, FD_STEP, 13));
    out.push(neg(finite_diff_check(
        &Tampered::new(&sine, Tamper::CorruptGradient(1e-3)),
        20,
        FD_STEP,
        11,
    )));

    for suite in [&sine as &dyn Objective, &logistic] {
        out.push(unbiasedness_check(suite, 4, 20_000, 21));
        out.push(variance_check(suite, 4, 20_000, 22));
        out.push(grad_bound_check(suite, 8, 2_000, 23));
        out.push(smoothness_check(suite, 400, 24));
    }
    out.push(neg(unbiasedness_check(
        &Tampered::new(&sine, Tamper::BiasNoise(0.05)),
        4,
        20_000,
        21,
    )));
    out.push(neg(variance_check(
        &Tampered::new(&sine, Tamper::UnderstateSigma(0.8)),
        4,
        20_000,
        22,
    )));
    out.push(neg(grad_bound_check(
        &Tampered::new(&sine, Tamper::UnderstateGradBound(0.5)),
        8,
        2_000,
        23,
    )));
    out.push(neg(smoothness_check(
        &Tampered::new(&sine, Tamper::UnderstateSmoothness(0.5)),
        400,
        24,
    )));

    // replay identities
    let x0 = ParamVector::zeros(8);
    let base = |i: u64, t: u64| RunConfig::new(4, t, 0.05, i, x0.clone()).with_seed(5);
    out.push(replay_equivalence(
        "replay: interval 1 vs mini-batch baseline",
        &sine,
        &RunSpec::Interval(base(1, 500)),
        &RunSpec::Interval(RunConfig::minibatch(4, 500, 0.05, x0.clone()).with_seed(5)),
    )?);
    let shared = sine_family_with_phases(
        1.0,
        NoiseModel::Uniform { halfwidth: 0.5 },
        vec![vec![0.4; 8]; 4],
    )
    .map_err(EngineError::from)?;
    let setup = RunSetup::new(x0.clone()).with_seed(5);
    out.push(replay_equivalence(
        "replay: uniform heterogeneous lengths vs fixed interval",
        &shared,
        &RunSpec::Heterogeneous {
            hetero: HeteroConfig::new(vec![4; 4], 5, 0.05)?,
            setup: setup.clone(),
        },
        &RunSpec::Interval(base(4, 20)),
    )?);
    out.push(replay_equivalence(
        "replay: single-epoch schedule vs fixed interval",
        &sine,
        &RunSpec::TimeVarying {
            schedule: EpochSchedule::explicit(&[16], &[0.05])?,
            setup: setup.clone(),
        },
        &RunSpec::Interval(base(16, 16)),
    )?);
    out.push(replay_equivalence(
        "replay: sequential vs threaded execution",
        &sine,
        &RunSpec::Interval(base(8, 2_000)),
        &RunSpec::Interval(base(8, 2_000).with_execution(Execution::Threaded { threads: 2 })),
    )?);
    out.push(replay_equivalence(
        "replay: parameter server vs all-reduce",
        &sine,
        &RunSpec::Interval(base(8, 500).with_topology(TopologyKind::ParameterServer)),
        &RunSpec::Interval(base(8, 500).with_topology(TopologyKind::AllReduce)),
    )?);
    out.push(neg(replay_equivalence(
        "replay: interval 1 vs interval 2",
        &sine,
        &RunSpec::Interval(base(1, 500)),
        &RunSpec::Interval(base(2, 500)),
    )?));

    // exhaustive enumeration
    let atoms = |a: Vec<f64>| {
        sine_family_with_phases(
            1.0,
            NoiseModel::Atoms(a),
            vec![vec![0.3, 1.9], vec![2.5, -0.7]],
        )
        .map_err(EngineError::from)
    };
    let x0 = ParamVector::new(vec![0.2, -0.4]).map_err(EngineError::from)?;
    let two = atoms(vec![-0.5, 0.5])?;
    let three = atoms(vec![-0.6, 0.0, 0.6])?;
    let silent = atoms(vec![0.0])?;
    let tiny = |t: u64, i: u64| RunConfig::new(2, t, 0.2, i, x0.clone());
    out.push(small_instance_exhaustive(&two, &tiny(2, 2), 4_000, 31)?);
    out.push(small_instance_exhaustive(&silent, &tiny(2, 2), 8, 32)?);
    out.push(small_instance_exhaustive(&three, &tiny(3, 3), 2_000, 33)?);
    out.push(small_instance_exhaustive(&three, &tiny(3, 1), 2_000, 34)?);
    out.push(neg(small_instance_exhaustive(
        &Tampered::new(&three, Tamper::UnderstateGradBound(0.1)),
        &tiny(3, 3),
        500,
        35,
    )?));
    let capped = match path_count(&three, &tiny(4, 2)) {
        Err(OracleError::TooManyPaths { paths, cap }) => OracleVerdict::judge(
            "enumeration cap enforced",
            0.0,
            0.0,
            format!("{paths} > {cap} rejected"),
        ),
        other => OracleVerdict::judge(
            "enumeration cap enforced",
            1.0,
            0.0,
            format!("unexpected {other:?}"),
        ),
    };
    out.push(capped);

    // statistic recomputation
    let record = run_pr_sgd(
        &sine,
        &RunConfig::new(4, 400, 0.05, 4, ParamVector::zeros(8)).with_seed(3),
    )?;
    out.push(recompute_statistic(&sine, &record));
    let mut broken = record.clone();
    broken.rows[17].grad_sq_prev *= 1.0 + 1e-9;
    out.push(neg(recompute_statistic(&sine, &broken)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_sine_family, sine_family_with_phases, NoiseModel, ParamVector};

    #[test]
    fn constant_fixture_has_zero_differences() {
        let v = finite_diff_check(&ConstantObjective::new(3, 2, 4.0), 3, FD_STEP, 0);
        assert!(v.passed);
        assert_eq!(v.error, 0.0);
    }

    #[test]
    fn corrupted_gradient_fails() {
        let s = make_sine_family(4, 2, 1.0, 0.0, 0).unwrap();
        assert!(finite_diff_check(&s, 5, FD_STEP, 1).passed);
        let bad = Tampered::new(&s, Tamper::CorruptGradient(1e-3));
        assert!(!finite_diff_check(&bad, 5, FD_STEP, 1).passed);
        assert!(!finite_diff_check(&s, 5, 0.0, 1).passed);
    }

    #[test]
    fn sixteen_paths_for_two_atoms() {
        let s =
            sine_family_with_phases(1.0, NoiseModel::Atoms(vec![-0.1, 0.1]), vec![vec![0.0]; 2])
                .unwrap();
        let c = RunConfig::new(2, 2, 0.1, 2, ParamVector::zeros(1));
        assert_eq!(path_count(&s, &c).unwrap(), 16);
        let e = enumerate_expectations(&s, &c).unwrap();
        assert_eq!(e.deviation.len(), 2);
        assert_eq!(e.grad_sq.len(), 3);
        // (ξ_1 − ξ_2)/2 is 0 or ±δ with equal odds, so E[dev] = γ²δ²/2
        assert!((e.deviation[0][0] - 0.01 * 0.01 / 2.0).abs() < 1e-18);
    }

    #[test]
    fn continuous_noise_is_rejected() {
        let s = make_sine_family(2, 2, 1.0, 0.5, 0).unwrap();
        let c = RunConfig::new(2, 2, 0.1, 2, ParamVector::zeros(2));
        assert!(matches!(
            path_count(&s, &c),
            Err(OracleError::ContinuousNoise)
        ));
    }

    #[test]
    fn csv_and_table() {
        let v = vec![OracleVerdict::judge("a", 0.5, 1.0, String::new())];
        assert!(verdicts_csv(&v).starts_with("name,passed,error,tolerance\n\"a\",true,"));
        assert!(verdict_table(&v).contains("PASS"));
    }
}
