//! Local SGD with periodic model averaging.
//!
//! Every algorithm here is driven by the same loop over epochs. An epoch is a
//! run of local steps followed (usually) by one averaging round; workers that
//! finish their share of an epoch early sit still until the round. After each
//! step the recorder sees the fresh local iterates, and on averaging steps all
//! workers then adopt the node average it computed.
//!
//! Two execution paths exist. The sequential path steps workers one at a time
//! and is the reference. The threaded path runs each worker's steps between
//! averaging rounds on a rayon pool, buffers the iterates, then replays them
//! through the recorder in order. Both perform the same floating point
//! operations in the same order, so their records agree bit for bit.

pub mod schedule;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use thiserror::Error;

use crate::comms::{CommLedger, CommTopology, CommsError, TopologyKind};
use crate::problems::{Objective, ParamVector, ProblemError};
use crate::stream::WorkerStream;
use crate::trajectory::{RecordMeta, Recorder, RunKind, StepInfo, TrajectoryRecord};

pub use schedule::{
    compute_theorem2_schedule, plan_interval, Epoch, EpochSchedule, ScheduleMode,
    MAX_SCHEDULE_EPOCHS,
};

/// Longest stretch of steps the threaded path buffers before replaying.
const CHUNK_STEPS: u64 = 1024;
/// Runs longer than this are recorded with a stride.
const FULL_RECORD_LIMIT: u64 = 10_000;
/// Cap on heterogeneous epoch counts.
pub const MAX_HETERO_EPOCHS: u64 = 10_000_000;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Comms(#[from] CommsError),
    #[error("objective has {suite} workers but the run asks for {config}")]
    WorkerCountMismatch { suite: usize, config: usize },
    #[error("initial point has dimension {found}, objective expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite iterate at t = {t} on worker {worker}")]
    NonFinite { t: u64, worker: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("schedule of {epochs} epochs exceeds the cap of {cap}")]
    ScheduleTooLarge { epochs: u64, cap: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Sequential,
    /// Workers step concurrently on a dedicated pool of `threads` threads.
    Threaded { threads: usize },
}

/// Settings shared by every algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSetup {
    pub x0: ParamVector,
    pub master_seed: u64,
    /// Recording stride; `None` picks 1 up to 10⁴ steps and `⌈T/10⁴⌉` beyond.
    pub record_every: Option<u64>,
    pub execution: Execution,
    pub topology: TopologyKind,
}

impl RunSetup {
    pub fn new(x0: ParamVector) -> Self {
        Self {
            x0,
            master_seed: 0,
            record_every: None,
            execution: Execution::Sequential,
            topology: TopologyKind::AllReduce,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn with_topology(mut self, topology: TopologyKind) -> Self {
        self.topology = topology;
        self
    }

    pub fn with_record_every(mut self, stride: u64) -> Self {
        self.record_every = Some(stride);
        self
    }

    fn stride(&self, iterations: u64) -> u64 {
        self.record_every
            .unwrap_or_else(|| default_stride(iterations))
            .max(1)
    }

    fn check(&self, suite: &dyn Objective) -> Result<(), EngineError> {
        if self.x0.dim() != suite.dim() {
            return Err(EngineError::DimensionMismatch {
                expected: suite.dim(),
                found: self.x0.dim(),
            });
        }
        if self.record_every == Some(0) {
            return Err(EngineError::InvalidConfig(
                "record_every must be at least 1".into(),
            ));
        }
        if let Execution::Threaded { threads: 0 } = self.execution {
            return Err(EngineError::InvalidConfig(
                "threaded execution needs at least one thread".into(),
            ));
        }
        Ok(())
    }
}

pub fn default_stride(iterations: u64) -> u64 {
    if iterations <= FULL_RECORD_LIMIT {
        1
    } else {
        iterations.div_ceil(FULL_RECORD_LIMIT)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncMode {
    PrSgd,
    /// Averaging after every step from a shared point. Requires `I = 1`.
    MinibatchBaseline,
    /// A single average at the end. Requires `I = T`.
    OneShot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub workers: usize,
    pub iterations: u64,
    pub gamma: f64,
    pub interval: u64,
    pub mode: SyncMode,
    pub setup: RunSetup,
}

impl RunConfig {
    pub fn new(
        workers: usize,
        iterations: u64,
        gamma: f64,
        interval: u64,
        x0: ParamVector,
    ) -> Self {
        Self {
            workers,
            iterations,
            gamma,
            interval,
            mode: SyncMode::PrSgd,
            setup: RunSetup::new(x0),
        }
    }

    pub fn minibatch(workers: usize, iterations: u64, gamma: f64, x0: ParamVector) -> Self {
        Self {
            mode: SyncMode::MinibatchBaseline,
            ..Self::new(workers, iterations, gamma, 1, x0)
        }
    }

    pub fn one_shot(workers: usize, iterations: u64, gamma: f64, x0: ParamVector) -> Self {
        Self {
            mode: SyncMode::OneShot,
            ..Self::new(workers, iterations, gamma, iterations, x0)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.setup.master_seed = seed;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.setup.execution = execution;
        self
    }

    pub fn with_topology(mut self, topology: TopologyKind) -> Self {
        self.setup.topology = topology;
        self
    }

    pub fn with_record_every(mut self, stride: u64) -> Self {
        self.setup.record_every = Some(stride);
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.workers == 0 {
            return Err(EngineError::InvalidConfig(
                "workers must be at least 1".into(),
            ));
        }
        if self.iterations == 0 {
            return Err(EngineError::InvalidConfig(
                "iterations must be at least 1".into(),
            ));
        }
        check_gamma(self.gamma)?;
        if self.interval == 0 || self.interval > self.iterations {
            return Err(EngineError::InvalidConfig(format!(
                "interval must satisfy 1 <= I <= T, got I = {} with T = {}",
                self.interval, self.iterations
            )));
        }
        match self.mode {
            SyncMode::MinibatchBaseline if self.interval != 1 => Err(EngineError::InvalidConfig(
                "the mini-batch baseline requires interval 1".into(),
            )),
            SyncMode::OneShot if self.interval != self.iterations => {
                Err(EngineError::InvalidConfig(
                    "one-shot averaging requires interval = iterations".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

fn check_gamma(gamma: f64) -> Result<(), EngineError> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(EngineError::InvalidConfig(format!(
            "learning rate must be positive, got {gamma}"
        )))
    }
}

/// Per-worker epoch lengths, stored fastest worker first.
#[derive(Debug, Clone, PartialEq)]
pub struct HeteroConfig {
    lengths: Vec<u64>,
    /// `permutation[i]` is the caller's index of the worker stored at `i`.
    permutation: Vec<usize>,
    pub epochs: u64,
    pub gamma: f64,
}

impl HeteroConfig {
    /// Sorts `lengths` non-increasing (stable) and keeps the permutation.
    pub fn new(lengths: Vec<u64>, epochs: u64, gamma: f64) -> Result<Self, EngineError> {
        if lengths.is_empty() {
            return Err(EngineError::InvalidConfig(
                "need at least one worker length".into(),
            ));
        }
        if lengths.contains(&0) {
            return Err(EngineError::InvalidConfig(
                "worker epoch lengths must be positive".into(),
            ));
        }
        if epochs == 0 {
            return Err(EngineError::InvalidConfig(
                "epochs must be at least 1".into(),
            ));
        }
        if epochs > MAX_HETERO_EPOCHS {
            return Err(EngineError::ScheduleTooLarge {
                epochs,
                cap: MAX_HETERO_EPOCHS,
            });
        }
        check_gamma(gamma)?;
        let mut permutation: Vec<usize> = (0..lengths.len()).collect();
        permutation.sort_by(|&a, &b| lengths[b].cmp(&lengths[a]));
        let lengths = permutation.iter().map(|&i| lengths[i]).collect();
        Ok(Self {
            lengths,
            permutation,
            epochs,
            gamma,
        })
    }

    pub fn lengths(&self) -> &[u64] {
        &self.lengths
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn workers(&self) -> usize {
        self.lengths.len()
    }

    /// `I_1`, the longest epoch length.
    pub fn max_length(&self) -> u64 {
        self.lengths[0]
    }

    /// `j_k` for `k = 1..=I_1`: the number of workers with `I_i ≥ k`.
    pub fn active_counts(&self) -> Vec<u64> {
        (1..=self.max_length())
            .map(|k| self.lengths.iter().filter(|&&l| l >= k).count() as u64)
            .collect()
    }

    /// `S · Σ I_i`, the number of true gradient steps.
    pub fn gradient_steps(&self) -> u64 {
        self.epochs * self.lengths.iter().sum::<u64>()
    }
}

/// Any of the supported runs.
#[derive(Debug, Clone, PartialEq)]
pub enum RunSpec {
    Interval(RunConfig),
    TimeVarying {
        schedule: EpochSchedule,
        setup: RunSetup,
    },
    Heterogeneous {
        hetero: HeteroConfig,
        setup: RunSetup,
    },
}

pub fn run(suite: &dyn Objective, spec: &RunSpec) -> Result<TrajectoryRecord, EngineError> {
    match spec {
        RunSpec::Interval(config) => run_pr_sgd(suite, config),
        RunSpec::TimeVarying { schedule, setup } => run_time_varying(suite, schedule, setup),
        RunSpec::Heterogeneous { hetero, setup } => run_heterogeneous(suite, hetero, setup),
    }
}

/// PR-SGD, the mini-batch baseline, or one-shot averaging, per `config.mode`.
pub fn run_pr_sgd(
    suite: &dyn Objective,
    config: &RunConfig,
) -> Result<TrajectoryRecord, EngineError> {
    let streams = WorkerStream::for_workers(config.setup.master_seed, config.workers);
    run_pr_sgd_with_streams(suite, config, streams)
}

pub fn run_pr_sgd_with_streams(
    suite: &dyn Objective,
    config: &RunConfig,
    streams: Vec<WorkerStream>,
) -> Result<TrajectoryRecord, EngineError> {
    config.validate()?;
    check_suite(suite, config.workers, &config.setup, &streams)?;
    let flag = warn_gamma(suite, config.gamma);
    let (t, i) = (config.iterations, config.interval);
    let fingerprint = fingerprint(
        suite,
        &config.setup,
        &(
            config.workers,
            t,
            config.gamma.to_bits(),
            i,
            format!("{:?}", config.mode),
        ),
    );
    let meta = MetaSeed {
        kind: RunKind::Interval { interval: i },
        master_seed: config.setup.master_seed,
        fingerprint,
        gamma_exceeds_inverse_l: flag,
    };
    if config.mode == SyncMode::MinibatchBaseline {
        return run_minibatch(suite, config, streams, meta);
    }
    let full = t / i;
    let rest = t % i;
    let gamma = config.gamma;
    let plan = (1..=full)
        .map(move |s| EpochPlan {
            epoch: s,
            len: i,
            gamma,
            sync: true,
        })
        .chain((rest > 0).then_some(EpochPlan {
            epoch: full + 1,
            len: rest,
            gamma,
            sync: false,
        }));
    drive(
        suite,
        &config.setup,
        streams,
        plan,
        Weighting::Unit,
        None,
        t,
        meta,
    )
}

/// Epoch `s` runs `K^s` local steps at rate `γ^s`, then averages.
pub fn run_time_varying(
    suite: &dyn Objective,
    schedule: &EpochSchedule,
    setup: &RunSetup,
) -> Result<TrajectoryRecord, EngineError> {
    let streams = WorkerStream::for_workers(setup.master_seed, suite.workers());
    run_time_varying_with_streams(suite, schedule, setup, streams)
}

pub fn run_time_varying_with_streams(
    suite: &dyn Objective,
    schedule: &EpochSchedule,
    setup: &RunSetup,
    streams: Vec<WorkerStream>,
) -> Result<TrajectoryRecord, EngineError> {
    schedule.validate()?;
    check_suite(suite, suite.workers(), setup, &streams)?;
    let mut flag = false;
    let inv_l = 1.0 / suite.certificate().smoothness;
    if let Some(first) = schedule.epochs.iter().position(|e| e.gamma > inv_l) {
        log::warn!(
            "epoch {} has rate {} above 1/L = {}; bounds will not be certified",
            first + 1,
            schedule.epochs[first].gamma,
            inv_l
        );
        flag = true;
    }
    let mut h = DefaultHasher::new();
    for e in &schedule.epochs {
        (e.length, e.gamma.to_bits()).hash(&mut h);
    }
    let fingerprint = fingerprint(suite, setup, &(format!("{:?}", schedule.mode), h.finish()));
    let meta = MetaSeed {
        kind: RunKind::TimeVarying {
            epochs: schedule.epochs.len() as u64,
        },
        master_seed: setup.master_seed,
        fingerprint,
        gamma_exceeds_inverse_l: flag,
    };
    let plan = schedule.epochs.iter().enumerate().map(|(s, e)| EpochPlan {
        epoch: s as u64 + 1,
        len: e.length,
        gamma: e.gamma,
        sync: true,
    });
    drive(
        suite,
        setup,
        streams,
        plan,
        Weighting::Gamma,
        None,
        schedule.total_iterations(),
        meta,
    )
}

/// Worker `i` takes `I_i` steps per epoch; the rest of the epoch it is frozen.
///
/// Workers are simulated in the sorted order of [`HeteroConfig::lengths`]:
/// the worker at sorted position `i` owns random stream `i`.
pub fn run_heterogeneous(
    suite: &dyn Objective,
    hetero: &HeteroConfig,
    setup: &RunSetup,
) -> Result<TrajectoryRecord, EngineError> {
    let streams = WorkerStream::for_workers(setup.master_seed, hetero.workers());
    run_heterogeneous_with_streams(suite, hetero, setup, streams)
}

pub fn run_heterogeneous_with_streams(
    suite: &dyn Objective,
    hetero: &HeteroConfig,
    setup: &RunSetup,
    streams: Vec<WorkerStream>,
) -> Result<TrajectoryRecord, EngineError> {
    if !suite.identical_distributions() {
        return Err(EngineError::AssumptionViolated(format!(
            "heterogeneous epochs need identically distributed workers; {} is not",
            suite.label()
        )));
    }
    check_suite(suite, hetero.workers(), setup, &streams)?;
    let flag = warn_gamma(suite, hetero.gamma);
    let fingerprint = fingerprint(
        suite,
        setup,
        &(
            hetero.lengths.clone(),
            hetero.epochs,
            hetero.gamma.to_bits(),
        ),
    );
    let meta = MetaSeed {
        kind: RunKind::Heterogeneous {
            lengths: hetero.lengths.clone(),
            epochs: hetero.epochs,
        },
        master_seed: setup.master_seed,
        fingerprint,
        gamma_exceeds_inverse_l: flag,
    };
    let len = hetero.max_length();
    let gamma = hetero.gamma;
    let plan = (1..=hetero.epochs).map(move |s| EpochPlan {
        epoch: s,
        len,
        gamma,
        sync: true,
    });
    drive(
        suite,
        setup,
        streams,
        plan,
        Weighting::Active,
        Some(&hetero.lengths),
        hetero.epochs * len,
        meta,
    )
}

fn check_suite(
    suite: &dyn Objective,
    workers: usize,
    setup: &RunSetup,
    streams: &[WorkerStream],
) -> Result<(), EngineError> {
    if suite.workers() != workers {
        return Err(EngineError::WorkerCountMismatch {
            suite: suite.workers(),
            config: workers,
        });
    }
    if streams.len() != workers {
        return Err(EngineError::InvalidConfig(format!(
            "{} random streams supplied for {} workers",
            streams.len(),
            workers
        )));
    }
    setup.check(suite)
}

fn warn_gamma(suite: &dyn Objective, gamma: f64) -> bool {
    let l = suite.certificate().smoothness;
    let over = gamma * l > 1.0;
    if over {
        log::warn!(
            "learning rate {gamma} exceeds 1/L = {}; bounds will not be certified",
            1.0 / l
        );
    }
    over
}

fn fingerprint(suite: &dyn Objective, setup: &RunSetup, run: &impl Hash) -> String {
    let mut h = DefaultHasher::new();
    run.hash(&mut h);
    for v in setup.x0.iter() {
        v.to_bits().hash(&mut h);
    }
    setup.record_every.hash(&mut h);
    format!("{}|{}|{:016x}", suite.label(), setup.topology, h.finish())
}

struct MetaSeed {
    kind: RunKind,
    master_seed: u64,
    fingerprint: String,
    gamma_exceeds_inverse_l: bool,
}

struct EpochPlan {
    epoch: u64,
    len: u64,
    gamma: f64,
    sync: bool,
}

#[derive(Clone, Copy)]
enum Weighting {
    /// Weight 1 per step.
    Unit,
    /// Weight `γ^s`.
    Gamma,
    /// Weight `j_k`.
    Active,
}

struct WorkerState {
    id: usize,
    x: Vec<f64>,
    grad: Vec<f64>,
    stream: WorkerStream,
    local_steps: u64,
    /// Step at which the iterate first became non-finite.
    failed_at: Option<u64>,
}

impl WorkerState {
    /// One SGD step at rate `gamma`; returns false if the iterate blew up.
    #[inline]
    fn step(&mut self, suite: &dyn Objective, gamma: f64) -> bool {
        suite.sample_grad(self.id, &self.x, &mut self.stream, &mut self.grad);
        for (x, g) in self.x.iter_mut().zip(&self.grad) {
            *x -= gamma * *g;
        }
        self.local_steps += 1;
        self.x.iter().all(|v| v.is_finite())
    }
}

fn make_workers(setup: &RunSetup, streams: Vec<WorkerStream>) -> Vec<WorkerState> {
    streams
        .into_iter()
        .enumerate()
        .map(|(id, stream)| WorkerState {
            id,
            x: setup.x0.to_vec(),
            grad: vec![0.0; setup.x0.dim()],
            stream,
            local_steps: 0,
            failed_at: None,
        })
        .collect()
}

/// Shared epoch loop behind every algorithm except the mini-batch baseline.
#[allow(clippy::too_many_arguments)]
fn drive(
    suite: &dyn Objective,
    setup: &RunSetup,
    streams: Vec<WorkerStream>,
    plan: impl Iterator<Item = EpochPlan>,
    weighting: Weighting,
    lengths: Option<&[u64]>,
    iterations: u64,
    meta: MetaSeed,
) -> Result<TrajectoryRecord, EngineError> {
    let n = streams.len();
    let mut workers = make_workers(setup, streams);
    let mut recorder = Recorder::new(suite, &setup.x0, setup.stride(iterations));
    let mut ledger = CommLedger::new(CommTopology::new(setup.topology, n), suite.dim());
    let active_counts: Vec<u64> = match lengths {
        Some(l) => (1..=l[0])
            .map(|k| l.iter().filter(|&&li| li >= k).count() as u64)
            .collect(),
        None => Vec::new(),
    };
    let pool = match setup.execution {
        Execution::Sequential => None,
        Execution::Threaded { threads } => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| EngineError::InvalidConfig(format!("thread pool: {e}")))?,
        ),
    };
    let active = |w: usize, k: u64| lengths.is_none_or(|l| k <= l[w]);
    let info_for = |t: u64, epoch: &EpochPlan, k: u64, rounds: u64| {
        let (weight, int_weight) = match weighting {
            Weighting::Unit => (1.0, n as u64),
            Weighting::Gamma => (epoch.gamma, n as u64),
            Weighting::Active => {
                let j = active_counts[(k - 1) as usize];
                (j as f64, j)
            }
        };
        StepInfo {
            t,
            epoch: epoch.epoch,
            step: k,
            gamma: epoch.gamma,
            weight,
            int_weight,
            rounds,
        }
    };

    let mut t = 0u64;
    let mut buffers: Vec<Vec<f64>> = Vec::new();
    for epoch in plan {
        let mut k0 = 0u64;
        while k0 < epoch.len {
            let chunk = match pool {
                None => 1,
                Some(_) => (epoch.len - k0).min(CHUNK_STEPS),
            };
            let last_in_epoch = k0 + chunk == epoch.len;
            match &pool {
                None => {
                    let k = k0 + 1;
                    for w in workers.iter_mut() {
                        if active(w.id, k) && !w.step(suite, epoch.gamma) {
                            return Err(EngineError::NonFinite {
                                t: t + 1,
                                worker: w.id,
                            });
                        }
                    }
                    t += 1;
                    let sync = epoch.sync && last_in_epoch;
                    let rounds = ledger.rounds + sync as u64;
                    let info = info_for(t, &epoch, k, rounds);
                    let x_bar = recorder.observe(info, workers.iter().map(|w| w.x.as_slice()));
                    if sync {
                        ledger.record_round();
                        for w in workers.iter_mut() {
                            w.x.copy_from_slice(x_bar);
                        }
                        recorder.observe_reset(t, workers.iter().map(|w| w.x.as_slice()));
                    }
                }
                Some(pool) => {
                    let dim = suite.dim();
                    buffers.resize_with(n, Vec::new);
                    let t_base = t;
                    let gamma = epoch.gamma;
                    pool.install(|| {
                        workers
                            .par_iter_mut()
                            .zip(buffers.par_iter_mut())
                            .for_each(|(w, buf)| {
                                buf.clear();
                                for k in k0 + 1..=k0 + chunk {
                                    if active(w.id, k) && !w.step(suite, gamma) {
                                        w.failed_at = Some(t_base + (k - k0));
                                        return;
                                    }
                                    buf.extend_from_slice(&w.x);
                                }
                            })
                    });
                    if let Some((bad_t, worker)) = workers
                        .iter()
                        .filter_map(|w| w.failed_at.map(|f| (f, w.id)))
                        .min()
                    {
                        return Err(EngineError::NonFinite { t: bad_t, worker });
                    }
                    for off in 0..chunk as usize {
                        let k = k0 + off as u64 + 1;
                        t += 1;
                        let sync = epoch.sync && last_in_epoch && k == epoch.len;
                        let rounds = ledger.rounds + sync as u64;
                        let info = info_for(t, &epoch, k, rounds);
                        let states = buffers.iter().map(move |b| &b[off * dim..(off + 1) * dim]);
                        let x_bar = recorder.observe(info, states);
                        if sync {
                            ledger.record_round();
                            for w in workers.iter_mut() {
                                w.x.copy_from_slice(x_bar);
                            }
                            recorder.observe_reset(t, workers.iter().map(|w| w.x.as_slice()));
                        }
                    }
                }
            }
            k0 += chunk;
        }
    }

    let grad_evaluations = workers.iter().map(|w| w.local_steps).sum();
    Ok(recorder.finish(RecordMeta {
        kind: meta.kind,
        workers: n,
        master_seed: meta.master_seed,
        fingerprint: meta.fingerprint,
        grad_evaluations,
        ledger,
        gamma_exceeds_inverse_l: meta.gamma_exceeds_inverse_l,
    }))
}

/// Parallel mini-batch SGD: every worker samples at the shared point, and the
/// new point is the average of the workers' proposals `x̄ − γ G_i`.
///
/// Always runs sequentially; `setup.execution` is ignored.
fn run_minibatch(
    suite: &dyn Objective,
    config: &RunConfig,
    streams: Vec<WorkerStream>,
    meta: MetaSeed,
) -> Result<TrajectoryRecord, EngineError> {
    let n = config.workers;
    let dim = suite.dim();
    let setup = &config.setup;
    let mut recorder = Recorder::new(suite, &setup.x0, setup.stride(config.iterations));
    let mut ledger = CommLedger::new(CommTopology::new(setup.topology, n), dim);
    let mut streams = streams;
    let mut shared = setup.x0.to_vec();
    let mut proposals = vec![vec![0.0; dim]; n];
    let mut grad = vec![0.0; dim];
    let mut evaluations = 0u64;
    for t in 1..=config.iterations {
        for (w, (p, stream)) in proposals.iter_mut().zip(streams.iter_mut()).enumerate() {
            suite.sample_grad(w, &shared, stream, &mut grad);
            for ((p, x), g) in p.iter_mut().zip(&shared).zip(&grad) {
                *p = x - config.gamma * g;
            }
            evaluations += 1;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(EngineError::NonFinite { t, worker: w });
            }
        }
        let info = StepInfo {
            t,
            epoch: t,
            step: 1,
            gamma: config.gamma,
            weight: 1.0,
            int_weight: n as u64,
            rounds: ledger.rounds + 1,
        };
        let x_bar = recorder.observe(info, proposals.iter().map(|p| p.as_slice()));
        shared.copy_from_slice(x_bar);
        ledger.record_round();
        recorder.observe_reset(t, std::iter::repeat_n(shared.as_slice(), n));
    }
    Ok(recorder.finish(RecordMeta {
        kind: meta.kind,
        workers: n,
        master_seed: meta.master_seed,
        fingerprint: meta.fingerprint,
        grad_evaluations: evaluations,
        ledger,
        gamma_exceeds_inverse_l: meta.gamma_exceeds_inverse_l,
    }))
}
