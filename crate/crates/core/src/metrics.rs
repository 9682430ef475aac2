//! Convergence statistics, closed-form bounds and seed aggregation.

use std::fmt::Write as _;

use thiserror::Error;

use crate::problems::ConstantCertificate;
use crate::trajectory::{RunKind, TrajectoryRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("trajectory has no steps")]
    Empty,
    #[error("trajectory lacks {0}")]
    MissingMarkers(&'static str),
    #[error("weights sum to {found}, expected {expected}")]
    WeightMismatch { expected: u64, found: u64 },
    #[error("not certified: {0}")]
    NotCertified(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("need at least 2 runs, got {0}")]
    TooFewRuns(usize),
    #[error("runs differ in more than the seed: {0} vs {1}")]
    MixedBatch(String, String),
}

/// `(1/T) Σ_t ‖∇f(x̄^{t−1})‖²` over every step of the run.
pub fn avg_sq_grad_norm(traj: &TrajectoryRecord) -> Result<f64, MetricsError> {
    let s = &traj.totals;
    if s.steps == 0 {
        return Err(MetricsError::Empty);
    }
    Ok(s.sum_grad_sq / s.steps as f64)
}

/// Heterogeneous statistic: `Σ_s Σ_k j_k ‖∇f(x̄^{s,k−1})‖² / (S Σ_i I_i)`.
///
/// The `j_k` must sum to exactly `S Σ_i I_i`; this is checked in integers.
pub fn weighted_sq_grad_norm_hetero(traj: &TrajectoryRecord) -> Result<f64, MetricsError> {
    let RunKind::Heterogeneous { lengths, epochs } = &traj.kind else {
        return Err(MetricsError::MissingMarkers("per-worker epoch lengths"));
    };
    if traj.totals.steps == 0 {
        return Err(MetricsError::Empty);
    }
    let expected = epochs * lengths.iter().sum::<u64>();
    if traj.totals.int_weight_sum != expected {
        return Err(MetricsError::WeightMismatch {
            expected,
            found: traj.totals.int_weight_sum,
        });
    }
    Ok(traj.totals.weighted_sum / expected as f64)
}

/// Time-varying statistic: `Σ_s Σ_k γ^s ‖∇f(x̄^{s,k−1})‖² / Σ_s K^s γ^s`.
pub fn weighted_sq_grad_norm_tv(traj: &TrajectoryRecord) -> Result<f64, MetricsError> {
    if !matches!(traj.kind, RunKind::TimeVarying { .. }) {
        return Err(MetricsError::MissingMarkers("epoch learning rates"));
    }
    if traj.totals.steps == 0 {
        return Err(MetricsError::Empty);
    }
    Ok(traj.totals.weighted_sum / traj.totals.weight_sum)
}

/// Which statistic to aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    AvgSqGradNorm,
    WeightedHetero,
    WeightedTimeVarying,
}

impl Statistic {
    /// The statistic that goes with a run's kind.
    pub fn for_kind(kind: &RunKind) -> Self {
        match kind {
            RunKind::Interval { .. } => Statistic::AvgSqGradNorm,
            RunKind::TimeVarying { .. } => Statistic::WeightedTimeVarying,
            RunKind::Heterogeneous { .. } => Statistic::WeightedHetero,
        }
    }

    pub fn eval(self, traj: &TrajectoryRecord) -> Result<f64, MetricsError> {
        match self {
            Statistic::AvgSqGradNorm => avg_sq_grad_norm(traj),
            Statistic::WeightedHetero => weighted_sq_grad_norm_hetero(traj),
            Statistic::WeightedTimeVarying => weighted_sq_grad_norm_tv(traj),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Statistic::AvgSqGradNorm => "avg_sq_grad_norm",
            Statistic::WeightedHetero => "weighted_sq_grad_norm_hetero",
            Statistic::WeightedTimeVarying => "weighted_sq_grad_norm_tv",
        }
    }
}

/// `4γ²I²G²`.
pub fn lemma1_bound(gamma: f64, interval: u64, grad_bound: f64) -> f64 {
    let i = interval as f64;
    4.0 * gamma * gamma * i * i * grad_bound * grad_bound
}

/// `4γ²k²G²`, the deviation bound `k` local steps after a restart.
pub fn lemma3_bound(gamma: f64, k: u64, grad_bound: f64) -> f64 {
    lemma1_bound(gamma, k, grad_bound)
}

/// Constants entering the convergence bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub smoothness: f64,
    pub sigma: f64,
    pub grad_bound: f64,
    pub workers: usize,
    /// `f(x̄^0) − f*`, with `f*` exact or a certified lower bound.
    pub f0_minus_fstar: f64,
}

impl BoundConstants {
    pub fn from_certificate(cert: &ConstantCertificate, workers: usize, f0: f64) -> Self {
        Self {
            smoothness: cert.smoothness,
            sigma: cert.sigma,
            grad_bound: cert.grad_bound,
            workers,
            f0_minus_fstar: f0 - cert.f_star,
        }
    }

    fn check(&self) -> Result<(), MetricsError> {
        let ok = self.smoothness > 0.0
            && self.smoothness.is_finite()
            && self.sigma >= 0.0
            && self.sigma.is_finite()
            && self.grad_bound >= 0.0
            && self.grad_bound.is_finite()
            && self.workers >= 1
            && self.f0_minus_fstar >= 0.0
            && self.f0_minus_fstar.is_finite();
        if ok {
            Ok(())
        } else {
            Err(MetricsError::InvalidArgument(format!(
                "bad bound constants {self:?}"
            )))
        }
    }

    fn certify(&self, gamma: f64) -> Result<(), MetricsError> {
        self.check()?;
        if !(gamma > 0.0) {
            return Err(MetricsError::NotCertified(format!(
                "learning rate {gamma} is not positive"
            )));
        }
        if gamma * self.smoothness > 1.0 {
            return Err(MetricsError::NotCertified(format!(
                "learning rate {gamma} exceeds 1/L = {}",
                1.0 / self.smoothness
            )));
        }
        Ok(())
    }
}

/// The three terms of a convergence bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTerms {
    /// `2(f(x̄^0) − f*) / (γ · steps)`.
    pub initial_gap: f64,
    /// `4γ²I²G²L²`.
    pub deviation: f64,
    /// `(L/N) γ σ²`.
    pub noise: f64,
}

impl BoundTerms {
    pub fn total(&self) -> f64 {
        self.initial_gap + self.deviation + self.noise
    }
}

fn terms(c: &BoundConstants, gamma: f64, steps: f64, interval: f64) -> BoundTerms {
    let l = c.smoothness;
    BoundTerms {
        initial_gap: 2.0 * c.f0_minus_fstar / (gamma * steps),
        deviation: 4.0 * gamma * gamma * interval * interval * c.grad_bound * c.grad_bound * l * l,
        noise: l / c.workers as f64 * gamma * c.sigma * c.sigma,
    }
}

/// Fixed-interval bound; refuses to certify when `γ > 1/L`.
pub fn theorem1_bound(
    c: &BoundConstants,
    gamma: f64,
    iterations: u64,
    interval: u64,
) -> Result<BoundTerms, MetricsError> {
    c.certify(gamma)?;
    if iterations == 0 || interval == 0 {
        return Err(MetricsError::InvalidArgument(
            "T and I must be positive".into(),
        ));
    }
    Ok(terms(c, gamma, iterations as f64, interval as f64))
}

/// Heterogeneous bound with `I_1 = max I_i` and the mean epoch length.
pub fn theorem3_bound(
    c: &BoundConstants,
    gamma: f64,
    epochs: u64,
    lengths: &[u64],
) -> Result<BoundTerms, MetricsError> {
    c.certify(gamma)?;
    if epochs == 0 || lengths.is_empty() || lengths.contains(&0) {
        return Err(MetricsError::InvalidArgument(
            "need S >= 1 and positive lengths".into(),
        ));
    }
    if lengths.windows(2).any(|w| w[1] > w[0]) {
        return Err(MetricsError::InvalidArgument(
            "lengths must be non-increasing".into(),
        ));
    }
    let mean = lengths.iter().sum::<u64>() as f64 / lengths.len() as f64;
    Ok(terms(c, gamma, epochs as f64 * mean, lengths[0] as f64))
}

/// `(2L(f0 − f*) + 4G² + σ²) / √(NT)`, valid for `γ = √N/(L√T)`, `T ≥ N`.
pub fn corollary1_bound(c: &BoundConstants, iterations: u64) -> Result<f64, MetricsError> {
    c.check()?;
    if iterations < c.workers as u64 {
        return Err(MetricsError::InvalidArgument(format!(
            "need T >= N, got T = {iterations} with N = {}",
            c.workers
        )));
    }
    let num = 2.0 * c.smoothness * c.f0_minus_fstar
        + 4.0 * c.grad_bound * c.grad_bound
        + c.sigma * c.sigma;
    Ok(num / (c.workers as f64 * iterations as f64).sqrt())
}

/// `γ = √N / (L√T)`.
pub fn corollary1_gamma(workers: usize, iterations: u64, smoothness: f64) -> f64 {
    (workers as f64).sqrt() / (smoothness * (iterations as f64).sqrt())
}

/// Measured statistic against a bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub mean: f64,
    pub standard_error: f64,
    /// `mean + 2·SE`, the value compared with the bound.
    pub measured: f64,
    pub bound: f64,
    pub terms: BoundTerms,
    pub satisfied: bool,
    /// `bound − measured`.
    pub slack: f64,
}

impl BoundReport {
    pub fn new(mean: f64, standard_error: f64, terms: BoundTerms) -> Self {
        let measured = mean + 2.0 * standard_error;
        let bound = terms.total();
        Self {
            mean,
            standard_error,
            measured,
            bound,
            terms,
            satisfied: measured <= bound,
            slack: bound - measured,
        }
    }

    /// Flat `key = value` lines.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mean = {:.16e}", self.mean);
        let _ = writeln!(s, "standard_error = {:.16e}", self.standard_error);
        let _ = writeln!(s, "measured_mean_plus_2se = {:.16e}", self.measured);
        let _ = writeln!(s, "bound = {:.16e}", self.bound);
        let _ = writeln!(s, "bound_initial_gap = {:.16e}", self.terms.initial_gap);
        let _ = writeln!(s, "bound_deviation = {:.16e}", self.terms.deviation);
        let _ = writeln!(s, "bound_noise = {:.16e}", self.terms.noise);
        let _ = writeln!(s, "satisfied = {}", self.satisfied);
        let _ = writeln!(s, "slack = {:.16e}", self.slack);
        s
    }
}

/// Sample mean and standard error (`n − 1` denominator).
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Mean and standard error of `statistic` over runs that differ only in seed.
pub fn aggregate_over_seeds(
    runs: &[TrajectoryRecord],
    statistic: Statistic,
) -> Result<(f64, f64), MetricsError> {
    if runs.len() < 2 {
        return Err(MetricsError::TooFewRuns(runs.len()));
    }
    let first = &runs[0].fingerprint;
    if let Some(other) = runs.iter().find(|r| &r.fingerprint != first) {
        return Err(MetricsError::MixedBatch(
            first.clone(),
            other.fingerprint.clone(),
        ));
    }
    let values = runs
        .iter()
        .map(|r| statistic.eval(r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(mean_and_se(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::TrajectoryRow;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn plain_average() {
        let rows = vec![
            TrajectoryRow::summand(1, 1, 1, 4.0, 1.0),
            TrajectoryRow::summand(2, 2, 1, 2.0, 1.0),
        ];
        let r = TrajectoryRecord::from_rows(RunKind::Interval { interval: 1 }, 1, rows);
        assert_eq!(avg_sq_grad_norm(&r).unwrap(), 3.0);
        let empty = TrajectoryRecord::from_rows(RunKind::Interval { interval: 1 }, 1, vec![]);
        assert_eq!(avg_sq_grad_norm(&empty), Err(MetricsError::Empty));
    }

    #[test]
    fn hetero_weights() {
        let (a, b) = (0.7, 2.5);
        let kind = RunKind::Heterogeneous {
            lengths: vec![2, 1],
            epochs: 1,
        };
        let rows = vec![
            TrajectoryRow::summand(1, 1, 1, a, 2.0),
            TrajectoryRow::summand(2, 1, 2, b, 1.0),
        ];
        let r = TrajectoryRecord::from_rows(kind.clone(), 2, rows);
        assert!(close(
            weighted_sq_grad_norm_hetero(&r).unwrap(),
            (a + b / 2.0) / 1.5
        ));
        let bad =
            TrajectoryRecord::from_rows(kind, 2, vec![TrajectoryRow::summand(1, 1, 1, a, 2.0)]);
        assert!(matches!(
            weighted_sq_grad_norm_hetero(&bad),
            Err(MetricsError::WeightMismatch {
                expected: 3,
                found: 2
            })
        ));
        let plain = TrajectoryRecord::from_rows(RunKind::Interval { interval: 1 }, 2, vec![]);
        assert!(matches!(
            weighted_sq_grad_norm_hetero(&plain),
            Err(MetricsError::MissingMarkers(_))
        ));
    }

    #[test]
    fn time_varying_weights() {
        let rows = vec![
            TrajectoryRow::summand(1, 1, 1, 1.0, 2.0),
            TrajectoryRow::summand(2, 2, 1, 4.0, 1.0),
        ];
        let r = TrajectoryRecord::from_rows(RunKind::TimeVarying { epochs: 2 }, 1, rows);
        assert_eq!(weighted_sq_grad_norm_tv(&r).unwrap(), 2.0);
    }

    #[test]
    fn deviation_bounds() {
        assert_eq!(lemma1_bound(0.0, 5, 3.0), 0.0);
        assert!(close(lemma1_bound(0.1, 4, 2.0), 2.56));
        assert!(close(
            lemma1_bound(0.1, 8, 2.0),
            4.0 * lemma1_bound(0.1, 4, 2.0)
        ));
        assert_eq!(lemma3_bound(0.1, 4, 2.0), lemma1_bound(0.1, 4, 2.0));
    }

    fn unit(n: usize) -> BoundConstants {
        BoundConstants {
            smoothness: 1.0,
            sigma: 1.0,
            grad_bound: 1.0,
            workers: n,
            f0_minus_fstar: 1.0,
        }
    }

    #[test]
    fn fixed_interval_bound() {
        let b = theorem1_bound(&unit(4), 0.1, 100, 2).unwrap();
        assert!(close(b.initial_gap, 0.2));
        assert!(close(b.deviation, 0.16));
        assert!(close(b.noise, 0.025));
        assert!(close(b.total(), 0.385));
        let b1 = theorem1_bound(&unit(4), 0.1, 100, 1).unwrap();
        assert!(close(b.deviation, 4.0 * b1.deviation));
        assert_eq!(b.initial_gap, b1.initial_gap);
        assert!(matches!(
            theorem1_bound(&unit(4), 1.5, 100, 2),
            Err(MetricsError::NotCertified(_))
        ));
    }

    #[test]
    fn heterogeneous_bound() {
        let b = theorem3_bound(&unit(2), 0.1, 10, &[4, 2]).unwrap();
        assert!(close(b.total(), 2.0 / 3.0 + 0.64 + 0.05));
        let u = theorem3_bound(&unit(2), 0.1, 10, &[4, 4]).unwrap();
        let t1 = theorem1_bound(&unit(2), 0.1, 40, 4).unwrap();
        assert!(close(u.total(), t1.total()));
        assert!(theorem3_bound(&unit(2), 0.1, 10, &[2, 4]).is_err());
    }

    #[test]
    fn corollary_bound() {
        let c = unit(4);
        assert!(close(corollary1_bound(&c, 65_536).unwrap(), 7.0 / 512.0));
        assert!(corollary1_bound(&c, 3).is_err());
        assert_eq!(corollary1_gamma(4, 65_536, 1.0), 0.0078125);
    }

    #[test]
    fn standard_errors() {
        assert_eq!(mean_and_se(&[1.0, 3.0]), (2.0, 1.0));
        assert_eq!(mean_and_se(&[5.0, 5.0, 5.0]), (5.0, 0.0));
    }

    #[test]
    fn report_uses_conservative_value() {
        let terms = BoundTerms {
            initial_gap: 1.0,
            deviation: 0.0,
            noise: 0.0,
        };
        assert!(BoundReport::new(0.9, 0.04, terms).satisfied);
        assert!(!BoundReport::new(0.9, 0.06, terms).satisfied);
        assert!(BoundReport::new(0.9, 0.0, terms)
            .to_kv()
            .contains("satisfied = true"));
    }
}
