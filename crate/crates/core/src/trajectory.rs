//! Trajectory records and the recorder the engine feeds them through.
//!
//! Row `t` describes step `t`: the node average `x̄^{t-1}` the step started
//! from (with `f` and `‖∇f‖²` there), and the per-worker deviations
//! `‖x̄^t − x_i^t‖²` of the local iterates the step produced, measured before
//! any averaging adopts them.
//!
//! The convergence statistics are accumulated on every step regardless of the
//! recording stride, so they never depend on which rows were kept.

use crate::comms::{mean_into, CommLedger};
use crate::problems::Objective;

#[derive(Debug, Clone, PartialEq)]
pub enum RunKind {
    /// Fixed synchronisation interval (PR-SGD, mini-batch baseline, one-shot).
    Interval {
        interval: u64,
    },
    TimeVarying {
        epochs: u64,
    },
    /// Per-worker epoch lengths, sorted non-increasing.
    Heterogeneous {
        lengths: Vec<u64>,
        epochs: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: u64,
    pub epoch: u64,
    /// Local step within the current epoch, starting at 1.
    pub step: u64,
    pub gamma: f64,
    /// Statistic weight of this step: 1, `γ^s`, or `j_k`.
    pub weight: f64,
    pub x_bar_prev: Vec<f64>,
    pub f_prev: f64,
    pub grad_sq_prev: f64,
    pub deviations: Vec<f64>,
    /// Deviation of the adopted states from `x̄^t`, on averaging steps.
    pub reset_deviation: Option<f64>,
    /// Communication rounds completed after this step.
    pub rounds: u64,
}

impl TrajectoryRow {
    /// A row carrying only a statistic summand, for hand-built records.
    pub fn summand(t: u64, epoch: u64, step: u64, grad_sq_prev: f64, weight: f64) -> Self {
        Self {
            t,
            epoch,
            step,
            gamma: 0.0,
            weight,
            x_bar_prev: Vec::new(),
            f_prev: f64::NAN,
            grad_sq_prev,
            deviations: Vec::new(),
            reset_deviation: None,
            rounds: 0,
        }
    }

    pub fn max_deviation(&self) -> f64 {
        self.deviations.iter().fold(0.0, |m, d| m.max(*d))
    }
}

/// Sums over every step of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepTotals {
    pub steps: u64,
    pub sum_grad_sq: f64,
    pub weighted_sum: f64,
    pub weight_sum: f64,
    /// Sum of integer weights `j_k` (equals `N` per step outside heterogeneous runs).
    pub int_weight_sum: u64,
}

impl StepTotals {
    fn add(&mut self, grad_sq: f64, weight: f64, int_weight: u64) {
        self.steps += 1;
        self.sum_grad_sq += grad_sq;
        self.weighted_sum += weight * grad_sq;
        self.weight_sum += weight;
        self.int_weight_sum += int_weight;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub kind: RunKind,
    pub workers: usize,
    pub dim: usize,
    pub stride: u64,
    pub master_seed: u64,
    /// Everything about the run except the seed; used to refuse mixed batches.
    pub fingerprint: String,
    pub x0: Vec<f64>,
    pub rows: Vec<TrajectoryRow>,
    pub totals: StepTotals,
    pub x_final: Vec<f64>,
    pub f_final: f64,
    pub grad_sq_final: f64,
    /// Largest `‖x̄^t − x_i^t‖²` over all steps and workers.
    pub peak_deviation: f64,
    /// `peak_by_step[k-1]`: largest deviation seen `k` local steps after a restart.
    pub peak_by_step: Vec<f64>,
    pub max_reset_deviation: f64,
    pub grad_evaluations: u64,
    pub ledger: Option<CommLedger>,
    pub gamma_exceeds_inverse_l: bool,
}

impl TrajectoryRecord {
    /// Builds a record from explicit rows, recomputing the totals from them.
    /// Integer weights are taken from `weight` for heterogeneous kinds and
    /// set to `workers` otherwise.
    pub fn from_rows(kind: RunKind, workers: usize, rows: Vec<TrajectoryRow>) -> Self {
        let mut totals = StepTotals::default();
        for r in &rows {
            let int_weight = match kind {
                RunKind::Heterogeneous { .. } => r.weight as u64,
                _ => workers as u64,
            };
            totals.add(r.grad_sq_prev, r.weight, int_weight);
        }
        Self {
            kind,
            workers,
            dim: rows.first().map_or(0, |r| r.x_bar_prev.len()),
            stride: 1,
            master_seed: 0,
            fingerprint: String::new(),
            x0: rows
                .first()
                .map(|r| r.x_bar_prev.clone())
                .unwrap_or_default(),
            peak_deviation: rows.iter().fold(0.0, |m, r| m.max(r.max_deviation())),
            rows,
            totals,
            x_final: Vec::new(),
            f_final: f64::NAN,
            grad_sq_final: f64::NAN,
            peak_by_step: Vec::new(),
            max_reset_deviation: 0.0,
            grad_evaluations: 0,
            ledger: None,
            gamma_exceeds_inverse_l: false,
        }
    }

    /// Whether every step has a stored row.
    pub fn is_complete(&self) -> bool {
        self.stride == 1 && self.rows.len() as u64 == self.totals.steps
    }
}

/// Describes one step to the recorder.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepInfo {
    pub t: u64,
    pub epoch: u64,
    pub step: u64,
    pub gamma: f64,
    pub weight: f64,
    pub int_weight: u64,
    pub rounds: u64,
}

pub(crate) struct Recorder<'a> {
    suite: &'a dyn Objective,
    stride: u64,
    x_bar: Vec<f64>,
    next_x_bar: Vec<f64>,
    grad_sq: f64,
    scratch: Vec<f64>,
    x0: Vec<f64>,
    rows: Vec<TrajectoryRow>,
    totals: StepTotals,
    peak: f64,
    peak_by_step: Vec<f64>,
    max_reset: f64,
}

impl<'a> Recorder<'a> {
    pub fn new(suite: &'a dyn Objective, x0: &[f64], stride: u64) -> Self {
        let mut scratch = vec![0.0; x0.len()];
        let grad_sq = suite.grad_norm_sq(x0, &mut scratch);
        Self {
            suite,
            stride: stride.max(1),
            x_bar: x0.to_vec(),
            next_x_bar: vec![0.0; x0.len()],
            grad_sq,
            scratch,
            x0: x0.to_vec(),
            rows: Vec::new(),
            totals: StepTotals::default(),
            peak: 0.0,
            peak_by_step: Vec::new(),
            max_reset: 0.0,
        }
    }

    /// Records step `info.t` given the local iterates it produced, and
    /// returns `x̄^t`.
    pub fn observe<'s, I>(&mut self, info: StepInfo, states: I) -> &[f64]
    where
        I: IntoIterator<Item = &'s [f64]> + Clone,
    {
        self.totals.add(self.grad_sq, info.weight, info.int_weight);

        mean_into(states.clone(), &mut self.next_x_bar).expect("engine passes consistent states");
        let deviations: Vec<f64> = states
            .into_iter()
            .map(|x| sq_dist(&self.next_x_bar, x))
            .collect();
        let k = info.step as usize;
        if self.peak_by_step.len() < k {
            self.peak_by_step.resize(k, 0.0);
        }
        for d in &deviations {
            self.peak = self.peak.max(*d);
            let slot = &mut self.peak_by_step[k - 1];
            *slot = slot.max(*d);
        }

        if (info.t - 1).is_multiple_of(self.stride) {
            self.rows.push(TrajectoryRow {
                t: info.t,
                epoch: info.epoch,
                step: info.step,
                gamma: info.gamma,
                weight: info.weight,
                x_bar_prev: self.x_bar.clone(),
                f_prev: self.suite.value(&self.x_bar),
                grad_sq_prev: self.grad_sq,
                deviations,
                reset_deviation: None,
                rounds: info.rounds,
            });
        }

        std::mem::swap(&mut self.x_bar, &mut self.next_x_bar);
        self.grad_sq = self.suite.grad_norm_sq(&self.x_bar, &mut self.scratch);
        &self.x_bar
    }

    /// Checks the states adopted after an averaging step against `x̄^t`.
    pub fn observe_reset<'s, I>(&mut self, t: u64, states: I)
    where
        I: IntoIterator<Item = &'s [f64]>,
    {
        let reset = states
            .into_iter()
            .map(|x| sq_dist(&self.x_bar, x))
            .fold(0.0, f64::max);
        self.max_reset = self.max_reset.max(reset);
        if let Some(row) = self.rows.last_mut().filter(|r| r.t == t) {
            row.reset_deviation = Some(reset);
        }
    }

    pub fn finish(self, meta: RecordMeta) -> TrajectoryRecord {
        let f_final = self.suite.value(&self.x_bar);
        TrajectoryRecord {
            kind: meta.kind,
            workers: meta.workers,
            dim: self.x0.len(),
            stride: self.stride,
            master_seed: meta.master_seed,
            fingerprint: meta.fingerprint,
            x0: self.x0,
            rows: self.rows,
            totals: self.totals,
            f_final,
            grad_sq_final: self.grad_sq,
            x_final: self.x_bar,
            peak_deviation: self.peak,
            peak_by_step: self.peak_by_step,
            max_reset_deviation: self.max_reset,
            grad_evaluations: meta.grad_evaluations,
            ledger: Some(meta.ledger),
            gamma_exceeds_inverse_l: meta.gamma_exceeds_inverse_l,
        }
    }
}

pub(crate) struct RecordMeta {
    pub kind: RunKind,
    pub workers: usize,
    pub master_seed: u64,
    pub fingerprint: String,
    pub grad_evaluations: u64,
    pub ledger: CommLedger,
    pub gamma_exceeds_inverse_l: bool,
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
