//! Synthetic finite-sum objectives `f(x) = (1/N) Σ_i f_i(x)` with certified
//! constants.
//!
//! Every family ships a [`ConstantCertificate`] whose bounds hold for all
//! `x ∈ ℝ^m`, and a stochastic-gradient oracle whose noise has bounded
//! support, so that `‖G_i‖ ≤ G` holds for every single draw rather than only
//! in expectation.

use std::f64::consts::{PI, TAU};
use std::ops::{Deref, Range};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::stream::WorkerStream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("worker index {worker} out of range for {workers} workers")]
    WorkerOutOfRange { worker: usize, workers: usize },
    #[error("non-finite coordinate at index {index}")]
    NonFinite { index: usize },
    #[error("noise model has unbounded support: {0}")]
    UnboundedNoise(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

fn invalid(name: &'static str, reason: impl Into<String>) -> ProblemError {
    ProblemError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// A point in parameter space. All coordinates are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(coords: Vec<f64>) -> Result<Self, ProblemError> {
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(ProblemError::NonFinite { index });
        }
        Ok(Self(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Result<Self, ProblemError> {
        Self::new(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ParamVector {
    type Error = ProblemError;

    fn try_from(coords: Vec<f64>) -> Result<Self, ProblemError> {
        Self::new(coords)
    }
}

/// Constants of the smoothness / bounded-moment assumptions.
///
/// `grad_bound` is a per-sample bound `‖∇F_i(x; ζ)‖ ≤ G`, which implies the
/// second-moment bound. When `f_star_is_exact` is false, `f_star` is a
/// certified lower bound on the minimum. `global` is false for test-only
/// families whose bounds do not hold on all of `ℝ^m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCertificate {
    pub smoothness: f64,
    pub sigma: f64,
    pub grad_bound: f64,
    pub f_star: f64,
    pub f_star_is_exact: bool,
    pub global: bool,
}

impl ConstantCertificate {
    pub fn validate(&self) -> Result<(), ProblemError> {
        if !(self.smoothness > 0.0) {
            return Err(invalid("smoothness", "L must be positive"));
        }
        if !(self.sigma >= 0.0) {
            return Err(invalid("sigma", "sigma must be non-negative"));
        }
        if !(self.grad_bound > 0.0) {
            return Err(invalid("grad_bound", "G must be positive"));
        }
        if self.grad_bound * self.grad_bound < self.sigma * self.sigma {
            return Err(invalid("grad_bound", "G^2 must dominate sigma^2"));
        }
        Ok(())
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma * self.sigma
    }
}

/// Additive gradient noise.
///
/// `Atoms` draws one of its values with equal probability and adds it to every
/// coordinate; the values must average to zero. `Gaussian` exists so that it
/// can be named in configs and rejected: its support is unbounded.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    None,
    Uniform { halfwidth: f64 },
    Atoms(Vec<f64>),
    Gaussian { std: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), ProblemError> {
        match self {
            NoiseModel::None => Ok(()),
            NoiseModel::Uniform { halfwidth } => {
                if halfwidth.is_finite() && *halfwidth >= 0.0 {
                    Ok(())
                } else {
                    Err(invalid("noise_halfwidth", "must be finite and >= 0"))
                }
            }
            NoiseModel::Atoms(atoms) => {
                if atoms.is_empty() || atoms.iter().any(|a| !a.is_finite()) {
                    return Err(invalid("atoms", "need at least one finite atom"));
                }
                let scale = atoms.iter().fold(0.0f64, |m, a| m.max(a.abs()));
                let sum: f64 = atoms.iter().sum();
                if sum.abs() > 1e-12 * scale.max(1.0) {
                    return Err(invalid("atoms", "atoms must average to zero"));
                }
                Ok(())
            }
            NoiseModel::Gaussian { std } => Err(ProblemError::UnboundedNoise(format!(
                "gaussian noise with std {std} violates the per-sample gradient bound"
            ))),
        }
    }

    /// `E‖ξ‖²` for an `m`-dimensional draw.
    pub fn variance(&self, dim: usize) -> f64 {
        let m = dim as f64;
        match self {
            NoiseModel::None => 0.0,
            NoiseModel::Uniform { halfwidth } => m * halfwidth * halfwidth / 3.0,
            NoiseModel::Atoms(atoms) => {
                m * atoms.iter().map(|a| a * a).sum::<f64>() / atoms.len() as f64
            }
            NoiseModel::Gaussian { std } => m * std * std,
        }
    }

    /// Largest possible `‖ξ‖`.
    pub fn max_norm(&self, dim: usize) -> f64 {
        let root_m = (dim as f64).sqrt();
        match self {
            NoiseModel::None => 0.0,
            NoiseModel::Uniform { halfwidth } => halfwidth * root_m,
            NoiseModel::Atoms(atoms) => atoms.iter().fold(0.0f64, |m, a| m.max(a.abs())) * root_m,
            NoiseModel::Gaussian { .. } => f64::INFINITY,
        }
    }

    /// Number of equiprobable outcomes per draw, for discrete models.
    pub fn atom_count(&self) -> Option<usize> {
        match self {
            NoiseModel::None => Some(1),
            NoiseModel::Atoms(atoms) => Some(atoms.len()),
            _ => None,
        }
    }

    #[inline]
    fn add_to(&self, stream: &mut WorkerStream, out: &mut [f64]) {
        match self {
            NoiseModel::None => {}
            NoiseModel::Uniform { halfwidth } => {
                if *halfwidth == 0.0 {
                    return;
                }
                for o in out.iter_mut() {
                    *o += halfwidth * (2.0 * stream.next_unit() - 1.0);
                }
            }
            NoiseModel::Atoms(atoms) => {
                let k = atoms.len();
                let idx = ((stream.next_unit() * k as f64) as usize).min(k - 1);
                let a = atoms[idx];
                for o in out.iter_mut() {
                    *o += a;
                }
            }
            // rejected at construction
            NoiseModel::Gaussian { .. } => unreachable!("gaussian noise is never constructed"),
        }
    }
}

/// A finite-sum objective with one component per worker.
///
/// Slice-based methods are unchecked hot paths used by the engine; the
/// checked free functions ([`eval_f`], [`eval_grad_f`], [`sample_stoch_grad`])
/// validate dimensions first.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn workers(&self) -> usize;
    fn certificate(&self) -> &ConstantCertificate;
    /// True when every worker samples from the same distribution.
    fn identical_distributions(&self) -> bool;

    fn component_value(&self, worker: usize, x: &[f64]) -> f64;
    fn component_grad(&self, worker: usize, x: &[f64], out: &mut [f64]);
    /// Writes one realised `∇F_i(x; ζ)` into `out`, consuming draws from `stream`.
    fn sample_grad(&self, worker: usize, x: &[f64], stream: &mut WorkerStream, out: &mut [f64]);

    /// Equiprobable outcomes per sample when the noise is discrete.
    fn noise_atoms(&self) -> Option<usize> {
        None
    }

    fn label(&self) -> String {
        "objective".to_string()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let n = self.workers();
        let mut sum = 0.0;
        for i in 0..n {
            sum += self.component_value(i, x);
        }
        sum / n as f64
    }

    fn grad(&self, x: &[f64], out: &mut [f64]) {
        component_average_grad(self, x, out);
    }

    fn grad_norm_sq(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        self.grad(x, scratch);
        scratch.iter().map(|g| g * g).sum()
    }
}

/// `(1/N) Σ_i ∇f_i(x)`, summed in worker order.
pub fn component_average_grad<O: Objective + ?Sized>(obj: &O, x: &[f64], out: &mut [f64]) {
    let n = obj.workers();
    let mut scratch = vec![0.0; x.len()];
    out.fill(0.0);
    for i in 0..n {
        obj.component_grad(i, x, &mut scratch);
        for (o, g) in out.iter_mut().zip(&scratch) {
            *o += g;
        }
    }
    for o in out.iter_mut() {
        *o /= n as f64;
    }
}

// ---------------------------------------------------------------------------
// Sine family

/// `f_i(x) = a Σ_j sin(x_j + φ_ij)` with additive bounded noise.
#[derive(Debug, Clone)]
pub struct SineFamily {
    dim: usize,
    workers: usize,
    amplitude: f64,
    /// Row-major `workers × dim`.
    phases: Vec<f64>,
    noise: NoiseModel,
}

impl SineFamily {
    fn phase_row(&self, worker: usize) -> &[f64] {
        &self.phases[worker * self.dim..(worker + 1) * self.dim]
    }

    /// Exact minimum: per coordinate `Σ_i sin(u + φ_ij) = R_j sin(u + ψ_j)`
    /// with `R_j = |Σ_i e^{iφ_ij}|`.
    fn exact_minimum(&self) -> f64 {
        let mut total = 0.0;
        for j in 0..self.dim {
            let (mut re, mut im) = (0.0f64, 0.0f64);
            for i in 0..self.workers {
                let phi = self.phases[i * self.dim + j];
                re += phi.cos();
                im += phi.sin();
            }
            total += re.hypot(im);
        }
        -self.amplitude * total / self.workers as f64
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }
}

// ---------------------------------------------------------------------------
// Logistic family

/// Radius of the sphere the logistic features are drawn on.
pub const LOGISTIC_FEATURE_RADIUS: f64 = 1.0;
const LABEL_FLIP_PROBABILITY: f64 = 0.1;
/// `max_u |d/du u²/(1+u²)|`, attained at `u = 1/√3`.
const REG_GRAD_MAX: f64 = 0.649_519_052_838_329; // 3√3/8

/// Average logistic loss over a worker's samples plus the nonconvex penalty
/// `λ Σ_j x_j²/(1+x_j²)`.
#[derive(Debug, Clone)]
pub struct LogisticFamily {
    dim: usize,
    workers: usize,
    /// Row-major `samples × dim`.
    features: Vec<f64>,
    labels: Vec<f64>,
    ranges: Vec<Range<usize>>,
    reg_weight: f64,
    shared: bool,
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[inline]
fn reg_value(u: f64) -> f64 {
    let u2 = u * u;
    u2 / (1.0 + u2)
}

#[inline]
fn reg_grad(u: f64) -> f64 {
    let d = 1.0 + u * u;
    2.0 * u / (d * d)
}

impl LogisticFamily {
    fn sample(&self, s: usize) -> (&[f64], f64) {
        (
            &self.features[s * self.dim..(s + 1) * self.dim],
            self.labels[s],
        )
    }

    fn margin(w: &[f64], x: &[f64]) -> f64 {
        w.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Gradient of the loss on one sample, without the regulariser.
    #[inline]
    fn add_sample_grad(&self, s: usize, x: &[f64], scale: f64, out: &mut [f64]) {
        let (w, y) = self.sample(s);
        let coef = -y * sigmoid(-y * Self::margin(w, x)) * scale;
        for (o, wj) in out.iter_mut().zip(w) {
            *o += coef * wj;
        }
    }

    fn add_reg_grad(&self, x: &[f64], out: &mut [f64]) {
        for (o, xj) in out.iter_mut().zip(x) {
            *o += self.reg_weight * reg_grad(*xj);
        }
    }

    pub fn samples_for(&self, worker: usize) -> Range<usize> {
        self.ranges[worker].clone()
    }

    /// Per-sample gradient (data term plus regulariser) for a given sample index.
    pub fn sample_grad_at(&self, sample: usize, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        self.add_sample_grad(sample, x, 1.0, out);
        self.add_reg_grad(x, out);
    }
}

// ---------------------------------------------------------------------------
// Quadratic family (test-only)

/// `f_i(x) = ‖x − c_i‖²`. Gradients are unbounded on `ℝ^m`, so the
/// certificate is flagged non-global and `G` is infinite.
#[derive(Debug, Clone)]
pub struct QuadraticFamily {
    dim: usize,
    workers: usize,
    centers: Vec<f64>,
    noise: NoiseModel,
}

impl QuadraticFamily {
    fn center(&self, worker: usize) -> &[f64] {
        &self.centers[worker * self.dim..(worker + 1) * self.dim]
    }
}

// ---------------------------------------------------------------------------
// Suite

#[derive(Debug, Clone)]
pub enum Family {
    Sine(SineFamily),
    Logistic(LogisticFamily),
    Quadratic(QuadraticFamily),
}

/// One of the built-in objective families together with its certificate.
#[derive(Debug, Clone)]
pub struct ObjectiveSuite {
    family: Family,
    certificate: ConstantCertificate,
    identical: bool,
}

impl ObjectiveSuite {
    pub fn family(&self) -> &Family {
        &self.family
    }
}

fn check_sizes(dim: usize, workers: usize) -> Result<(), ProblemError> {
    if dim == 0 {
        return Err(invalid("dim", "must be at least 1"));
    }
    if workers == 0 {
        return Err(invalid("workers", "must be at least 1"));
    }
    Ok(())
}

/// Sine family with per-worker phases drawn uniformly from `[0, 2π)`.
pub fn make_sine_family(
    dim: usize,
    workers: usize,
    amplitude: f64,
    noise_halfwidth: f64,
    seed: u64,
) -> Result<ObjectiveSuite, ProblemError> {
    check_sizes(dim, workers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<Vec<f64>> = (0..workers)
        .map(|_| (0..dim).map(|_| rng.random::<f64>() * TAU).collect())
        .collect();
    sine_family_with_phases(
        amplitude,
        NoiseModel::Uniform {
            halfwidth: noise_halfwidth,
        },
        phases,
    )
}

/// Sine family with explicit phases, one row per worker.
pub fn sine_family_with_phases(
    amplitude: f64,
    noise: NoiseModel,
    phases: Vec<Vec<f64>>,
) -> Result<ObjectiveSuite, ProblemError> {
    let workers = phases.len();
    let dim = phases.first().map_or(0, Vec::len);
    check_sizes(dim, workers)?;
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(invalid("amplitude", "must be positive and finite"));
    }
    if let Some(row) = phases.iter().find(|r| r.len() != dim) {
        return Err(ProblemError::DimensionMismatch {
            expected: dim,
            found: row.len(),
        });
    }
    if phases.iter().flatten().any(|p| !p.is_finite()) {
        return Err(invalid("phases", "must be finite"));
    }
    noise.validate()?;

    let identical = phases.windows(2).all(|w| w[0] == w[1]);
    let family = SineFamily {
        dim,
        workers,
        amplitude,
        phases: phases.into_iter().flatten().collect(),
        noise,
    };
    let root_m = (dim as f64).sqrt();
    let certificate = ConstantCertificate {
        smoothness: amplitude,
        sigma: family.noise.variance(dim).sqrt(),
        grad_bound: amplitude * root_m + family.noise.max_norm(dim),
        f_star: family.exact_minimum(),
        f_star_is_exact: true,
        global: true,
    };
    certificate.validate()?;
    Ok(ObjectiveSuite {
        family: Family::Sine(family),
        certificate,
        identical,
    })
}

/// Logistic regression on synthetic data with a bounded nonconvex penalty.
///
/// Features lie on the unit sphere; labels come from a planted direction with
/// a 10% flip rate. With `shared_data` every worker samples the pooled
/// `workers × samples_per_worker` dataset, so all `D_i` coincide.
pub fn make_logistic_family(
    dim: usize,
    workers: usize,
    samples_per_worker: usize,
    nonconvex_reg_weight: f64,
    shared_data: bool,
    seed: u64,
) -> Result<ObjectiveSuite, ProblemError> {
    check_sizes(dim, workers)?;
    if samples_per_worker == 0 {
        return Err(invalid("samples_per_worker", "must be at least 1"));
    }
    if !(nonconvex_reg_weight >= 0.0 && nonconvex_reg_weight.is_finite()) {
        return Err(invalid("reg_weight", "must be finite and >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let total = workers * samples_per_worker;
    let mut features = Vec::with_capacity(total * dim);
    let mut labels = Vec::with_capacity(total);
    for _ in 0..total {
        let mut w: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            w[0] = 1.0;
        } else {
            w.iter_mut()
                .for_each(|v| *v *= LOGISTIC_FEATURE_RADIUS / norm);
        }
        let mut y = if LogisticFamily::margin(&w, &planted) >= 0.0 {
            1.0
        } else {
            -1.0
        };
        if rng.random::<f64>() < LABEL_FLIP_PROBABILITY {
            y = -y;
        }
        features.extend_from_slice(&w);
        labels.push(y);
    }
    let ranges = (0..workers)
        .map(|i| {
            if shared_data {
                0..total
            } else {
                i * samples_per_worker..(i + 1) * samples_per_worker
            }
        })
        .collect();
    let r = LOGISTIC_FEATURE_RADIUS;
    let certificate = ConstantCertificate {
        smoothness: r * r / 4.0 + 2.0 * nonconvex_reg_weight,
        sigma: r,
        grad_bound: r + nonconvex_reg_weight * (dim as f64).sqrt() * REG_GRAD_MAX,
        f_star: 0.0,
        f_star_is_exact: false,
        global: true,
    };
    certificate.validate()?;
    Ok(ObjectiveSuite {
        family: Family::Logistic(LogisticFamily {
            dim,
            workers,
            features,
            labels,
            ranges,
            reg_weight: nonconvex_reg_weight,
            shared: shared_data,
        }),
        certificate,
        identical: shared_data || workers == 1,
    })
}

/// Test-only quadratic family `f_i(x) = ‖x − c_i‖²` (non-global certificate).
pub fn make_quadratic_family(
    centers: Vec<Vec<f64>>,
    noise: NoiseModel,
) -> Result<ObjectiveSuite, ProblemError> {
    let workers = centers.len();
    let dim = centers.first().map_or(0, Vec::len);
    check_sizes(dim, workers)?;
    if let Some(row) = centers.iter().find(|r| r.len() != dim) {
        return Err(ProblemError::DimensionMismatch {
            expected: dim,
            found: row.len(),
        });
    }
    noise.validate()?;
    let identical = centers.windows(2).all(|w| w[0] == w[1]);
    let mean: Vec<f64> = (0..dim)
        .map(|j| centers.iter().map(|c| c[j]).sum::<f64>() / workers as f64)
        .collect();
    let f_star = centers
        .iter()
        .map(|c| {
            c.iter()
                .zip(&mean)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum::<f64>()
        / workers as f64;
    let sigma = noise.variance(dim).sqrt();
    Ok(ObjectiveSuite {
        family: Family::Quadratic(QuadraticFamily {
            dim,
            workers,
            centers: centers.into_iter().flatten().collect(),
            noise,
        }),
        certificate: ConstantCertificate {
            smoothness: 2.0,
            sigma,
            grad_bound: f64::INFINITY,
            f_star,
            f_star_is_exact: true,
            global: false,
        },
        identical,
    })
}

impl Objective for ObjectiveSuite {
    fn dim(&self) -> usize {
        match &self.family {
            Family::Sine(f) => f.dim,
            Family::Logistic(f) => f.dim,
            Family::Quadratic(f) => f.dim,
        }
    }

    fn workers(&self) -> usize {
        match &self.family {
            Family::Sine(f) => f.workers,
            Family::Logistic(f) => f.workers,
            Family::Quadratic(f) => f.workers,
        }
    }

    fn certificate(&self) -> &ConstantCertificate {
        &self.certificate
    }

    fn identical_distributions(&self) -> bool {
        self.identical
    }

    fn noise_atoms(&self) -> Option<usize> {
        match &self.family {
            Family::Sine(f) => f.noise.atom_count(),
            Family::Quadratic(f) => f.noise.atom_count(),
            Family::Logistic(_) => None,
        }
    }

    fn label(&self) -> String {
        match &self.family {
            Family::Sine(f) => format!(
                "sine(m={}, N={}, a={}, noise={:?})",
                f.dim, f.workers, f.amplitude, f.noise
            ),
            Family::Logistic(f) => format!(
                "logistic(m={}, N={}, lambda={}, shared={})",
                f.dim, f.workers, f.reg_weight, f.shared
            ),
            Family::Quadratic(f) => format!("quadratic(m={}, N={})", f.dim, f.workers),
        }
    }

    fn component_value(&self, worker: usize, x: &[f64]) -> f64 {
        match &self.family {
            Family::Sine(f) => {
                let phases = f.phase_row(worker);
                f.amplitude
                    * x.iter()
                        .zip(phases)
                        .map(|(u, p)| (u + p).sin())
                        .sum::<f64>()
            }
            Family::Logistic(f) => {
                let range = f.ranges[worker].clone();
                let n = range.len() as f64;
                let loss: f64 = range
                    .map(|s| {
                        let (w, y) = f.sample(s);
                        softplus(-y * LogisticFamily::margin(w, x))
                    })
                    .sum();
                loss / n + f.reg_weight * x.iter().map(|u| reg_value(*u)).sum::<f64>()
            }
            Family::Quadratic(f) => {
                let c = f.center(worker);
                x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
            }
        }
    }

    fn component_grad(&self, worker: usize, x: &[f64], out: &mut [f64]) {
        match &self.family {
            Family::Sine(f) => {
                let phases = f.phase_row(worker);
                for ((o, u), p) in out.iter_mut().zip(x).zip(phases) {
                    *o = f.amplitude * (u + p).cos();
                }
            }
            Family::Logistic(f) => {
                out.fill(0.0);
                let range = f.ranges[worker].clone();
                let scale = 1.0 / range.len() as f64;
                for s in range {
                    f.add_sample_grad(s, x, scale, out);
                }
                f.add_reg_grad(x, out);
            }
            Family::Quadratic(f) => {
                let c = f.center(worker);
                for ((o, a), b) in out.iter_mut().zip(x).zip(c) {
                    *o = 2.0 * (a - b);
                }
            }
        }
    }

    fn sample_grad(&self, worker: usize, x: &[f64], stream: &mut WorkerStream, out: &mut [f64]) {
        match &self.family {
            Family::Sine(f) => {
                self.component_grad(worker, x, out);
                f.noise.add_to(stream, out);
            }
            Family::Logistic(f) => {
                let range = f.ranges[worker].clone();
                let n = range.len();
                let pick = ((stream.next_unit() * n as f64) as usize).min(n - 1);
                f.sample_grad_at(range.start + pick, x, out);
            }
            Family::Quadratic(f) => {
                self.component_grad(worker, x, out);
                f.noise.add_to(stream, out);
            }
        }
    }

    fn grad(&self, x: &[f64], out: &mut [f64]) {
        match &self.family {
            Family::Sine(f) => {
                // same summation order as the generic component average
                let n = f.workers as f64;
                for (j, o) in out.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for i in 0..f.workers {
                        s += f.amplitude * (x[j] + f.phases[i * f.dim + j]).cos();
                    }
                    *o = s / n;
                }
            }
            Family::Logistic(f) if f.shared => self.component_grad(0, x, out),
            _ => component_average_grad(self, x, out),
        }
    }

    fn grad_norm_sq(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        self.grad(x, scratch);
        scratch.iter().map(|g| g * g).sum()
    }
}

/// One realised stochastic gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct GradSample {
    pub grad: Vec<f64>,
    pub worker_id: usize,
    /// Position of the sample's first draw in the worker's stream.
    pub draw_index: u64,
}

fn check_dim(suite: &dyn Objective, x: &[f64]) -> Result<(), ProblemError> {
    if x.len() != suite.dim() {
        return Err(ProblemError::DimensionMismatch {
            expected: suite.dim(),
            found: x.len(),
        });
    }
    Ok(())
}

fn check_worker(suite: &dyn Objective, worker: usize) -> Result<(), ProblemError> {
    if worker >= suite.workers() {
        return Err(ProblemError::WorkerOutOfRange {
            worker,
            workers: suite.workers(),
        });
    }
    Ok(())
}

pub fn eval_f(suite: &dyn Objective, x: &[f64]) -> Result<f64, ProblemError> {
    check_dim(suite, x)?;
    Ok(suite.value(x))
}

pub fn eval_grad_f(suite: &dyn Objective, x: &[f64]) -> Result<Vec<f64>, ProblemError> {
    check_dim(suite, x)?;
    let mut out = vec![0.0; x.len()];
    suite.grad(x, &mut out);
    Ok(out)
}

pub fn eval_f_i(suite: &dyn Objective, worker: usize, x: &[f64]) -> Result<f64, ProblemError> {
    check_dim(suite, x)?;
    check_worker(suite, worker)?;
    Ok(suite.component_value(worker, x))
}

pub fn eval_grad_f_i(
    suite: &dyn Objective,
    worker: usize,
    x: &[f64],
) -> Result<Vec<f64>, ProblemError> {
    check_dim(suite, x)?;
    check_worker(suite, worker)?;
    let mut out = vec![0.0; x.len()];
    suite.component_grad(worker, x, &mut out);
    Ok(out)
}

/// Draws one `G_i = ∇F_i(x; ζ)` from worker `worker`'s private stream.
pub fn sample_stoch_grad(
    suite: &dyn Objective,
    worker: usize,
    x: &[f64],
    stream: &mut WorkerStream,
) -> Result<GradSample, ProblemError> {
    check_dim(suite, x)?;
    check_worker(suite, worker)?;
    let draw_index = stream.draw_index();
    let mut grad = vec![0.0; x.len()];
    suite.sample_grad(worker, x, stream, &mut grad);
    Ok(GradSample {
        grad,
        worker_id: worker,
        draw_index,
    })
}

/// A point drawn uniformly from `[-π, π]^m`, used by spot checks.
pub fn random_point(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * PI)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn zero_phase_sine(dim: usize, workers: usize, amplitude: f64, h: f64) -> ObjectiveSuite {
        sine_family_with_phases(
            amplitude,
            NoiseModel::Uniform { halfwidth: h },
            vec![vec![0.0; dim]; workers],
        )
        .unwrap()
    }

    #[test]
    fn sine_gradient_at_origin() {
        let s = zero_phase_sine(1, 1, 1.0, 0.0);
        assert_eq!(eval_grad_f(&s, &[0.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn sine_smoothness_is_amplitude() {
        let s = make_sine_family(2, 2, 0.5, 0.0, 1).unwrap();
        assert_eq!(s.certificate().smoothness, 0.5);
    }

    #[test]
    fn sine_variance_certificate() {
        let s = make_sine_family(3, 2, 1.0, 0.3, 1).unwrap();
        assert!((s.certificate().sigma_sq() - 0.09).abs() < 1e-15);
    }

    #[test]
    fn sine_value_and_stationary_point() {
        let s = zero_phase_sine(4, 3, 1.0, 0.0);
        assert_eq!(eval_f(&s, &[0.0; 4]).unwrap(), 0.0);
        let g = eval_grad_f(&s, &[FRAC_PI_2; 4]).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn sine_exact_minimum_matches_brute_force() {
        let s = make_sine_family(2, 3, 0.7, 0.0, 11).unwrap();
        // separable: minimise each coordinate over a fine grid
        let Family::Sine(f) = s.family() else {
            unreachable!()
        };
        let mut total = 0.0;
        for j in 0..2 {
            let mut best = f64::INFINITY;
            for k in 0..200_000 {
                let u = k as f64 / 200_000.0 * TAU;
                let v: f64 = (0..3).map(|i| (u + f.phases[i * 2 + j]).sin()).sum();
                best = best.min(v);
            }
            total += best;
        }
        let brute = 0.7 * total / 3.0;
        assert!((s.certificate().f_star - brute).abs() < 1e-9);
        assert!(s.certificate().f_star_is_exact);
    }

    #[test]
    fn quadratic_two_workers_value() {
        let q = make_quadratic_family(vec![vec![0.0], vec![2.0]], NoiseModel::None).unwrap();
        assert_eq!(eval_f(&q, &[1.0]).unwrap(), 1.0);
        assert!(!q.certificate().global);
        assert_eq!(q.certificate().f_star, 1.0);
    }

    #[test]
    fn gaussian_noise_rejected() {
        let err =
            sine_family_with_phases(1.0, NoiseModel::Gaussian { std: 1.0 }, vec![vec![0.0; 2]])
                .unwrap_err();
        assert!(matches!(err, ProblemError::UnboundedNoise(_)));
    }

    #[test]
    fn biased_atoms_rejected() {
        assert!(NoiseModel::Atoms(vec![1.0, 0.5]).validate().is_err());
        assert!(NoiseModel::Atoms(vec![-0.5, 0.5]).validate().is_ok());
    }

    #[test]
    fn zero_noise_sample_equals_gradient() {
        let s = make_sine_family(5, 3, 1.3, 0.0, 2).unwrap();
        let x = [0.1, -0.4, 2.0, 0.3, 1.0];
        let mut st = WorkerStream::seeded(9, 1);
        let g = sample_stoch_grad(&s, 1, &x, &mut st).unwrap();
        assert_eq!(g.grad, eval_grad_f_i(&s, 1, &x).unwrap());
        assert_eq!(g.worker_id, 1);
    }

    #[test]
    fn dimension_and_worker_errors() {
        let s = make_sine_family(3, 2, 1.0, 0.1, 2).unwrap();
        assert!(matches!(
            eval_f(&s, &[0.0; 2]),
            Err(ProblemError::DimensionMismatch {
                expected: 3,
                found: 2
            })
        ));
        let mut st = WorkerStream::seeded(0, 0);
        assert!(matches!(
            sample_stoch_grad(&s, 2, &[0.0; 3], &mut st),
            Err(ProblemError::WorkerOutOfRange { .. })
        ));
        assert!(ParamVector::new(vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn logistic_regulariser_gradient_vanishes_at_origin() {
        assert_eq!(reg_grad(0.0), 0.0);
        // maximiser of |r'|
        let u = 1.0 / 3f64.sqrt();
        assert!((reg_grad(u) - REG_GRAD_MAX).abs() < 1e-15);
    }

    #[test]
    fn logistic_single_sample_gradient_at_origin() {
        let s = make_logistic_family(4, 1, 1, 0.0, false, 5).unwrap();
        let Family::Logistic(f) = s.family() else {
            unreachable!()
        };
        let (w, y) = f.sample(0);
        let mut g = vec![0.0; 4];
        f.sample_grad_at(0, &[0.0; 4], &mut g);
        for (gj, wj) in g.iter().zip(w) {
            assert!((gj - (-y * wj / 2.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn shared_logistic_streams_are_identical_across_workers() {
        let s = make_logistic_family(3, 4, 8, 0.1, true, 3).unwrap();
        assert!(s.identical_distributions());
        let x = [0.2, -0.1, 0.5];
        let draws = [0.0, 0.3, 0.77, 0.99];
        let reference: Vec<Vec<f64>> = draws
            .iter()
            .map(|u| {
                let mut st = WorkerStream::scripted(vec![*u]);
                sample_stoch_grad(&s, 0, &x, &mut st).unwrap().grad
            })
            .collect();
        for w in 1..4 {
            for (u, expected) in draws.iter().zip(&reference) {
                let mut st = WorkerStream::scripted(vec![*u]);
                assert_eq!(
                    &sample_stoch_grad(&s, w, &x, &mut st).unwrap().grad,
                    expected
                );
            }
        }
        let split = make_logistic_family(3, 4, 8, 0.1, false, 3).unwrap();
        assert!(!split.identical_distributions());
    }

    #[test]
    fn logistic_shared_gradient_is_component_gradient() {
        let s = make_logistic_family(3, 3, 5, 0.2, true, 8).unwrap();
        let x = [0.3, 0.1, -0.7];
        let g = eval_grad_f(&s, &x).unwrap();
        let g0 = eval_grad_f_i(&s, 2, &x).unwrap();
        for (a, b) in g.iter().zip(&g0) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
