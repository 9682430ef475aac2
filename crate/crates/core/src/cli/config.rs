//! Experiment configuration files.
//!
//! The format is TOML restricted to one level of `[section]` headers with
//! scalar or array values. Sweep axes take either a scalar or a list.
//!
//! ```toml
//! [objective]
//! family = "sine"          # sine | logistic
//! dim = 8
//! amplitude = 1.0
//! noise_halfwidth = 0.5
//!
//! [run]
//! algorithm = "pr_sgd"     # pr_sgd | minibatch_baseline | one_shot | time_varying | heterogeneous
//! workers = 4
//! iterations = [4096, 16384]
//! interval = "plan"        # integer, list, or "plan"
//! gamma = "corollary"      # number, list, "corollary", "corollary_capped" or "inverse_l"
//!
//! [seeds]
//! start = 1
//! count = 16
//!
//! [output]
//! dir = "out"
//! certify = true
//! ```

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use super::CliError;
use crate::comms::TopologyKind;
use crate::engine::{
    compute_theorem2_schedule, plan_interval, EpochSchedule, Execution, HeteroConfig, RunConfig,
    RunSetup, RunSpec, SyncMode,
};
use crate::metrics::corollary1_gamma;
use crate::problems::{
    make_logistic_family, make_sine_family, sine_family_with_phases, NoiseModel, Objective,
    ObjectiveSuite, ParamVector,
};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum NumberOrRule<T> {
    Value(T),
    Values(Vec<T>),
    Rule(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Sine,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    #[default]
    Random,
    /// All phases zero, so every worker has the same component.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    PrSgd,
    MinibatchBaseline,
    OneShot,
    TimeVarying,
    Heterogeneous,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::PrSgd => "pr_sgd",
            Algorithm::MinibatchBaseline => "minibatch_baseline",
            Algorithm::OneShot => "one_shot",
            Algorithm::TimeVarying => "time_varying",
            Algorithm::Heterogeneous => "heterogeneous",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TopologyName {
    ParameterServer,
    #[default]
    AllReduce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleModeName {
    Theorem2,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSection {
    pub family: FamilyName,
    pub dim: usize,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub noise_halfwidth: f64,
    #[serde(default)]
    pub phases: PhaseMode,
    #[serde(default)]
    pub phase_seed: u64,
    #[serde(default = "default_samples")]
    pub samples_per_worker: usize,
    #[serde(default = "default_reg")]
    pub reg_weight: f64,
    #[serde(default)]
    pub shared_data: bool,
    #[serde(default)]
    pub data_seed: u64,
}

fn one() -> f64 {
    1.0
}
fn default_samples() -> usize {
    64
}
fn default_reg() -> f64 {
    0.1
}
fn default_threads() -> usize {
    1
}
fn default_dir() -> String {
    "prsgd-out".to_string()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum StartPoint {
    Fill(f64),
    Coords(Vec<f64>),
}

impl Default for StartPoint {
    fn default() -> Self {
        StartPoint::Fill(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub algorithm: Algorithm,
    pub workers: Option<OneOrMany<usize>>,
    pub iterations: Option<OneOrMany<u64>>,
    pub interval: Option<NumberOrRule<u64>>,
    pub gamma: Option<NumberOrRule<f64>>,
    #[serde(default)]
    pub x0: StartPoint,
    #[serde(default)]
    pub topology: TopologyName,
    #[serde(default = "default_threads")]
    pub threads: usize,
    pub record_every: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub mode: ScheduleModeName,
    pub epochs: Option<OneOrMany<u64>>,
    pub lengths: Option<Vec<u64>>,
    pub rates: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeteroSection {
    pub lengths: Vec<u64>,
    pub epochs: OneOrMany<u64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SeedSection {
    pub values: Option<Vec<u64>>,
    pub start: Option<u64>,
    pub count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: String,
    /// Exit with a bound-violation status when a certified point fails its bound.
    #[serde(default)]
    pub certify: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            certify: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub objective: ObjectiveSection,
    pub run: RunSection,
    pub schedule: Option<ScheduleSection>,
    pub hetero: Option<HeteroSection>,
    #[serde(default)]
    pub seeds: SeedSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn config_err(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let key = message
                .split('`')
                .nth(1)
                .filter(|_| message.starts_with("unknown field"))
                .unwrap_or("<file>")
                .to_string();
            CliError::Config {
                key,
                message: e.to_string().trim().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn seeds(&self) -> Result<Vec<u64>, CliError> {
        let s = &self.seeds;
        let seeds = match (&s.values, s.start, s.count) {
            (Some(v), None, None) => v.clone(),
            (None, start, Some(count)) => (0..count).map(|i| start.unwrap_or(0) + i).collect(),
            (None, _, None) => vec![0],
            _ => {
                return Err(config_err(
                    "seeds",
                    "give either `values` or `start`/`count`",
                ))
            }
        };
        if seeds.is_empty() {
            return Err(config_err("seeds", "at least one seed is required"));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(config_err("seeds", "seeds must be distinct"));
        }
        Ok(seeds)
    }

    /// Expands the sweep and validates every point before anything runs.
    pub fn sweep_points(&self) -> Result<Vec<SweepPoint>, CliError> {
        let run = &self.run;
        let execution = match run.threads {
            0 => return Err(config_err("run.threads", "must be at least 1")),
            1 => Execution::Sequential,
            t => Execution::Threaded { threads: t },
        };
        if run.record_every == Some(0) {
            return Err(config_err("run.record_every", "must be at least 1"));
        }
        let topology = match run.topology {
            TopologyName::ParameterServer => TopologyKind::ParameterServer,
            TopologyName::AllReduce => TopologyKind::AllReduce,
        };
        let setup_for = |x0: ParamVector| {
            let mut s = RunSetup::new(x0)
                .with_execution(execution)
                .with_topology(topology);
            s.record_every = run.record_every;
            s
        };
        let mut points = Vec::new();
        match run.algorithm {
            Algorithm::PrSgd | Algorithm::MinibatchBaseline | Algorithm::OneShot => {
                let workers = required(&run.workers, "run.workers")?;
                let iterations = required(&run.iterations, "run.iterations")?;
                for &n in &workers {
                    let suite = self.build_suite(n)?;
                    let x0 = self.start_point(&suite)?;
                    let l = suite.certificate().smoothness;
                    for &t in &iterations {
                        let intervals = match run.algorithm {
                            Algorithm::MinibatchBaseline => vec![1],
                            Algorithm::OneShot => vec![t],
                            _ => self.intervals(t, n)?,
                        };
                        for &i in &intervals {
                            for gamma in self.gammas(t, n, l)? {
                                let mut config = RunConfig::new(n, t, gamma, i, x0.clone());
                                config.mode = match run.algorithm {
                                    Algorithm::MinibatchBaseline => SyncMode::MinibatchBaseline,
                                    Algorithm::OneShot => SyncMode::OneShot,
                                    _ => SyncMode::PrSgd,
                                };
                                config.setup = setup_for(x0.clone());
                                config
                                    .validate()
                                    .map_err(|e| config_err("run.interval", e.to_string()))?;
                                points.push(SweepPoint {
                                    index: points.len(),
                                    algorithm: run.algorithm,
                                    workers: n,
                                    iterations: t,
                                    interval: Some(i),
                                    gamma: Some(gamma),
                                    epochs: None,
                                    lengths: None,
                                    suite: suite.clone(),
                                    spec: RunSpec::Interval(config),
                                });
                            }
                        }
                    }
                }
            }
            Algorithm::TimeVarying => {
                let workers = required(&run.workers, "run.workers")?;
                let sched = self.schedule.as_ref().ok_or_else(|| {
                    config_err("schedule", "time_varying runs need a [schedule] section")
                })?;
                for &n in &workers {
                    let suite = self.build_suite(n)?;
                    let x0 = self.start_point(&suite)?;
                    let schedules = match sched.mode {
                        ScheduleModeName::Theorem2 => {
                            let epochs = sched
                                .epochs
                                .as_ref()
                                .ok_or_else(|| {
                                    config_err("schedule.epochs", "required in theorem2 mode")
                                })?
                                .to_vec();
                            epochs
                                .iter()
                                .map(|&s| {
                                    compute_theorem2_schedule(n as u64, s)
                                        .map_err(|e| config_err("schedule.epochs", e.to_string()))
                                })
                                .collect::<Result<Vec<_>, _>>()?
                        }
                        ScheduleModeName::Explicit => {
                            let lengths = sched.lengths.as_ref().ok_or_else(|| {
                                config_err("schedule.lengths", "required in explicit mode")
                            })?;
                            let rates = sched.rates.as_ref().ok_or_else(|| {
                                config_err("schedule.rates", "required in explicit mode")
                            })?;
                            vec![EpochSchedule::explicit(lengths, rates)
                                .map_err(|e| config_err("schedule", e.to_string()))?]
                        }
                    };
                    for schedule in schedules {
                        points.push(SweepPoint {
                            index: points.len(),
                            algorithm: run.algorithm,
                            workers: n,
                            iterations: schedule.total_iterations(),
                            interval: None,
                            gamma: None,
                            epochs: Some(schedule.epochs.len() as u64),
                            lengths: None,
                            suite: suite.clone(),
                            spec: RunSpec::TimeVarying {
                                schedule,
                                setup: setup_for(x0.clone()),
                            },
                        });
                    }
                }
            }
            Algorithm::Heterogeneous => {
                let h = self.hetero.as_ref().ok_or_else(|| {
                    config_err("hetero", "heterogeneous runs need a [hetero] section")
                })?;
                let n = h.lengths.len();
                if let Some(w) = &run.workers {
                    if w.to_vec() != vec![n] {
                        return Err(config_err(
                            "run.workers",
                            "must equal the number of hetero.lengths",
                        ));
                    }
                }
                let suite = self.build_suite(n)?;
                if !suite.identical_distributions() {
                    return Err(config_err(
                        "objective",
                        "heterogeneous runs need identically distributed workers (shared_data or zero phases)",
                    ));
                }
                let x0 = self.start_point(&suite)?;
                let l = suite.certificate().smoothness;
                for &s in &h.epochs.to_vec() {
                    let t = s * h.lengths.iter().max().copied().unwrap_or(0);
                    for gamma in self.gammas(t, n, l)? {
                        let hetero = HeteroConfig::new(h.lengths.clone(), s, gamma)
                            .map_err(|e| config_err("hetero", e.to_string()))?;
                        points.push(SweepPoint {
                            index: points.len(),
                            algorithm: run.algorithm,
                            workers: n,
                            iterations: t,
                            interval: None,
                            gamma: Some(gamma),
                            epochs: Some(s),
                            lengths: Some(hetero.lengths().to_vec()),
                            suite: suite.clone(),
                            spec: RunSpec::Heterogeneous {
                                hetero,
                                setup: setup_for(x0.clone()),
                            },
                        });
                    }
                }
            }
        }
        if points.is_empty() {
            return Err(config_err("run", "the sweep is empty"));
        }
        Ok(points)
    }

    fn build_suite(&self, workers: usize) -> Result<ObjectiveSuite, CliError> {
        let o = &self.objective;
        if workers == 0 {
            return Err(config_err("run.workers", "must be at least 1"));
        }
        let built = match o.family {
            FamilyName::Sine => match o.phases {
                PhaseMode::Random => {
                    make_sine_family(o.dim, workers, o.amplitude, o.noise_halfwidth, o.phase_seed)
                }
                PhaseMode::Zero => sine_family_with_phases(
                    o.amplitude,
                    NoiseModel::Uniform {
                        halfwidth: o.noise_halfwidth,
                    },
                    vec![vec![0.0; o.dim]; workers],
                ),
            },
            FamilyName::Logistic => make_logistic_family(
                o.dim,
                workers,
                o.samples_per_worker,
                o.reg_weight,
                o.shared_data,
                o.data_seed,
            ),
        };
        built.map_err(|e| config_err("objective", e.to_string()))
    }

    fn start_point(&self, suite: &ObjectiveSuite) -> Result<ParamVector, CliError> {
        let coords = match &self.run.x0 {
            StartPoint::Fill(v) => vec![*v; suite.dim()],
            StartPoint::Coords(c) => {
                if c.len() != suite.dim() {
                    return Err(config_err(
                        "run.x0",
                        format!(
                            "has {} coordinates, objective.dim is {}",
                            c.len(),
                            suite.dim()
                        ),
                    ));
                }
                c.clone()
            }
        };
        ParamVector::new(coords).map_err(|e| config_err("run.x0", e.to_string()))
    }

    fn intervals(&self, t: u64, n: usize) -> Result<Vec<u64>, CliError> {
        match self.run.interval.as_ref() {
            None => Err(config_err("run.interval", "required for this algorithm")),
            Some(NumberOrRule::Value(i)) => Ok(vec![*i]),
            Some(NumberOrRule::Values(v)) => Ok(v.clone()),
            Some(NumberOrRule::Rule(r)) if r == "plan" => {
                if t < n as u64 {
                    return Err(config_err(
                        "run.interval",
                        format!("\"plan\" needs T >= N, got T = {t}, N = {n}"),
                    ));
                }
                Ok(vec![plan_interval(t, n as u64)])
            }
            Some(NumberOrRule::Rule(r)) => {
                Err(config_err("run.interval", format!("unknown rule {r:?}")))
            }
        }
    }

    fn gammas(&self, t: u64, n: usize, l: f64) -> Result<Vec<f64>, CliError> {
        let corollary = |capped: bool| {
            if t < n as u64 {
                return Err(config_err(
                    "run.gamma",
                    format!("corollary rates need T >= N, got T = {t}, N = {n}"),
                ));
            }
            let g = corollary1_gamma(n, t, l);
            Ok(vec![if capped { g.min(1.0 / l) } else { g }])
        };
        let gammas = match self.run.gamma.as_ref() {
            None => return Err(config_err("run.gamma", "required for this algorithm")),
            Some(NumberOrRule::Value(g)) => vec![*g],
            Some(NumberOrRule::Values(v)) => v.clone(),
            Some(NumberOrRule::Rule(r)) => match r.as_str() {
                "corollary" => corollary(false)?,
                "corollary_capped" => corollary(true)?,
                "inverse_l" => vec![1.0 / l],
                other => return Err(config_err("run.gamma", format!("unknown rule {other:?}"))),
            },
        };
        if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(config_err(
                "run.gamma",
                format!("must be positive, got {g}"),
            ));
        }
        Ok(gammas)
    }
}

fn required<T: Clone>(v: &Option<OneOrMany<T>>, key: &str) -> Result<Vec<T>, CliError> {
    let v = v
        .as_ref()
        .ok_or_else(|| config_err(key, "required for this algorithm"))?
        .to_vec();
    if v.is_empty() {
        return Err(config_err(key, "must not be empty"));
    }
    Ok(v)
}

/// One fully specified configuration of a sweep, without its seed.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub index: usize,
    pub algorithm: Algorithm,
    pub workers: usize,
    pub iterations: u64,
    pub interval: Option<u64>,
    pub gamma: Option<f64>,
    pub epochs: Option<u64>,
    pub lengths: Option<Vec<u64>>,
    pub suite: ObjectiveSuite,
    pub spec: RunSpec,
}

impl SweepPoint {
    pub fn spec_with_seed(&self, seed: u64) -> RunSpec {
        let mut spec = self.spec.clone();
        match &mut spec {
            RunSpec::Interval(c) => c.setup.master_seed = seed,
            RunSpec::TimeVarying { setup, .. } | RunSpec::Heterogeneous { setup, .. } => {
                setup.master_seed = seed
            }
        }
        spec
    }
}
