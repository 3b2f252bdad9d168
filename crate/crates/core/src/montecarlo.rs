//! Ensembles of noisy trajectories, moment estimates and sweeps over `N = ΓT`.
//!
//! Trajectory `i` of a run draws its variates from stream `i` of a ChaCha8
//! generator seeded with the run's master seed (see [`RngStream`]). Phases
//! are collected in index order and every reduction walks that order, so the
//! output does not depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::fields::FieldModel;
use crate::paths::{
    compose_trajectory, sample_ou_path, sample_wiener_path, DriftLoop, OuInit, OuParams, RngStream, TimeGrid,
    WienerParams,
};
use crate::phase::{gauge_invariant_phase, PhaseConvention};
use crate::{Error, Result, Vec3};

/// Largest tolerated fraction of samples hitting the Dirac string.
pub const MAX_REJECTION_RATE: f64 = 0.01;
pub const DEFAULT_SAMPLES_PER_POINT: usize = 20_000;
pub const DEFAULT_BOOTSTRAP: usize = 200;

/// Field selection; the linearized monopole is expanded about the drift
/// loop's starting point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    UniformAsymmetric,
    UniformSymmetric,
    Monopole,
    MonopoleLinear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    Wiener(WienerParams),
    Ou { params: OuParams, init: OuInit },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub field: FieldKind,
    pub noise: NoiseModel,
    pub drift: DriftLoop,
    pub total_time: f64,
    pub steps: usize,
    pub samples: usize,
    pub master_seed: u64,
    pub convention: PhaseConvention,
    pub bootstrap: usize,
}

impl ExperimentConfig {
    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.total_time, self.steps)
    }

    /// Concrete potential for this configuration. Uniform fields have unit
    /// strength; their magnitude lives in the coupling.
    pub fn field_model(&self) -> Result<FieldModel> {
        Ok(match self.field {
            FieldKind::UniformAsymmetric => FieldModel::UniformAsymmetric { b: 1.0 },
            FieldKind::UniformSymmetric => FieldModel::UniformSymmetric { b: 1.0 },
            FieldKind::Monopole => FieldModel::monopole(),
            FieldKind::MonopoleLinear => FieldModel::linearized_monopole(self.drift.position(0.0, self.total_time)?)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::invalid("samples must be >= 1"));
        }
        if self.convention.closure_panels == 0 {
            return Err(Error::invalid("quad_steps must be >= 1"));
        }
        if !self.convention.coupling.is_finite() {
            return Err(Error::invalid("coupling must be finite"));
        }
        if let DriftLoop::Precession { theta0, turns, .. } = self.drift {
            if turns == 0 {
                return Err(Error::invalid("precession needs at least one turn"));
            }
            if !theta0.is_finite() {
                return Err(Error::invalid("theta0 must be finite"));
            }
        }
        self.grid()?;
        self.field_model()?;
        Ok(())
    }

    /// Stationary noise amplitude `ε` for OU runs.
    pub fn ou_params(&self) -> Option<OuParams> {
        match self.noise {
            NoiseModel::Ou { params, .. } => Some(params),
            NoiseModel::Wiener(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseEnsemble {
    /// Accepted `(trajectory_index, phase)` pairs in index order.
    pub phases: Vec<(u64, f64)>,
    pub rejected: usize,
    pub config: ExperimentConfig,
}

impl PhaseEnsemble {
    pub fn values(&self) -> Vec<f64> {
        self.phases.iter().map(|&(_, p)| p).collect()
    }

    pub fn accepted(&self) -> usize {
        self.phases.len()
    }
}

fn with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(0) => Err(Error::invalid("worker count must be >= 1")),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Phase of trajectory `index`. `Ok(None)` marks a rejected sample.
fn phase_for_index(
    config: &ExperimentConfig,
    field: &FieldModel,
    grid: TimeGrid,
    index: u64,
) -> Result<Option<f64>> {
    let stream = RngStream::new(config.master_seed, index);
    let noise = match config.noise {
        NoiseModel::Wiener(w) => sample_wiener_path(grid, w, stream),
        NoiseModel::Ou { params, init } => sample_ou_path(grid, params, stream, init),
    };
    let traj = compose_trajectory(&config.drift, noise)?;
    match gauge_invariant_phase(field, &traj, &config.convention) {
        Ok(s) => Ok(Some(s.phase)),
        Err(Error::SingularRegion { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Sample `config.samples` trajectories and their gauge-invariant phases.
///
/// `workers = None` uses the ambient rayon pool.
pub fn run_experiment(config: &ExperimentConfig, workers: Option<usize>) -> Result<PhaseEnsemble> {
    config.validate()?;
    let field = config.field_model()?;
    let grid = config.grid()?;
    let results: Vec<Result<Option<f64>>> = with_workers(workers, || {
        (0..config.samples as u64)
            .into_par_iter()
            .map(|i| phase_for_index(config, &field, grid, i))
            .collect()
    })?;
    let mut phases = Vec::with_capacity(config.samples);
    let mut rejected = 0;
    for (i, r) in results.into_iter().enumerate() {
        match r? {
            Some(p) => phases.push((i as u64, p)),
            None => rejected += 1,
        }
    }
    if rejected as f64 > MAX_REJECTION_RATE * config.samples as f64 {
        return Err(Error::AbortedRun { rejected, samples: config.samples });
    }
    Ok(PhaseEnsemble { phases, rejected, config: config.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub mean: f64,
    /// Unbiased (`n - 1`) sample variance.
    pub variance: f64,
    pub stderr_mean: f64,
    pub stderr_variance: f64,
    pub accepted: usize,
}

impl MomentEstimate {
    pub fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Standard error of `σ = √variance` by the delta method.
    pub fn sigma_stderr(&self) -> f64 {
        if self.variance > 0.0 {
            self.stderr_variance / (2.0 * self.sigma())
        } else {
            0.0
        }
    }
}

fn mean_and_variance(values: impl Iterator<Item = f64>, n: usize, shift: f64) -> (f64, f64) {
    // shifted sums keep the one-pass variance accurate
    let (s1, s2) = values.fold((0.0, 0.0), |(s1, s2), x| {
        let d = x - shift;
        (s1 + d, s2 + d * d)
    });
    let nf = n as f64;
    let mean = shift + s1 / nf;
    let var = ((s2 - s1 * s1 / nf) / (nf - 1.0)).max(0.0);
    (mean, var)
}

/// Seed for the bootstrap stream attached to a run's master seed.
pub fn bootstrap_seed(master_seed: u64) -> u64 {
    master_seed ^ 0x9E37_79B9_7F4A_7C15
}

/// Sample moments of `values` with bootstrap standard errors.
///
/// Resample `r` draws its indices from stream `r` of a ChaCha8 generator
/// seeded with `resample_seed`.
pub fn estimate_values(values: &[f64], resamples: usize, resample_seed: u64) -> Result<MomentEstimate> {
    let n = values.len();
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 accepted samples, got {n}")));
    }
    if resamples < 2 {
        return Err(Error::invalid(format!("need at least 2 bootstrap resamples, got {resamples}")));
    }
    let plain_mean = values.iter().sum::<f64>() / n as f64;
    let (mean, variance) = mean_and_variance(values.iter().copied(), n, plain_mean);

    let stats: Vec<(f64, f64)> = (0..resamples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(resample_seed);
            rng.set_stream(r);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let d = values[rng.random_range(0..n)] - mean;
                s1 += d;
                s2 += d * d;
            }
            let nf = n as f64;
            (mean + s1 / nf, ((s2 - s1 * s1 / nf) / (nf - 1.0)).max(0.0))
        })
        .collect();

    let spread = |pick: fn(&(f64, f64)) -> f64| {
        let center = stats.iter().map(pick).sum::<f64>() / resamples as f64;
        mean_and_variance(stats.iter().map(pick), resamples, center).1.sqrt()
    };
    Ok(MomentEstimate {
        mean,
        variance,
        stderr_mean: spread(|s| s.0),
        stderr_variance: spread(|s| s.1),
        accepted: n,
    })
}

pub fn estimate_moments(ensemble: &PhaseEnsemble, resamples: usize, resample_seed: u64) -> Result<MomentEstimate> {
    estimate_values(&ensemble.values(), resamples, resample_seed)
}

/// Run and summarise in one go, with the bootstrap seeded from the master seed.
pub fn simulate(config: &ExperimentConfig, workers: Option<usize>) -> Result<(PhaseEnsemble, MomentEstimate)> {
    let ensemble = run_experiment(config, workers)?;
    let moments = estimate_moments(&ensemble, config.bootstrap, bootstrap_seed(config.master_seed))?;
    Ok((ensemble, moments))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// `ΓT` for OU noise; the operational time `T` itself for Wiener noise.
    pub n: f64,
    pub sigma: f64,
    pub sigma_stderr: f64,
}

/// How the sweep realises each `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// `T = N / Γ` at fixed `Γ` (OU).
    TimeAtFixedRate,
    /// `T = N` (Wiener).
    Time,
}

pub fn sweep_axis(config: &ExperimentConfig) -> SweepAxis {
    match config.noise {
        NoiseModel::Ou { .. } => SweepAxis::TimeAtFixedRate,
        NoiseModel::Wiener(_) => SweepAxis::Time,
    }
}

/// Configuration for sweep point `k` at `N = n`: the time step of the base
/// config is kept and the master seed is offset by `k`.
pub fn sweep_config(base: &ExperimentConfig, k: usize, n: f64) -> Result<ExperimentConfig> {
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::invalid(format!("sweep values must be positive, got {n}")));
    }
    let total_time = match base.noise {
        NoiseModel::Ou { params, .. } => n / params.gamma(),
        NoiseModel::Wiener(_) => n,
    };
    let dt = base.grid()?.dt();
    let steps = ((total_time / dt).round() as usize).max(1);
    Ok(ExperimentConfig {
        total_time,
        steps,
        master_seed: base.master_seed.wrapping_add(k as u64),
        ..base.clone()
    })
}

/// `σ_g` with bootstrap error at each `N`.
pub fn sweep_variance(base: &ExperimentConfig, n_values: &[f64], workers: Option<usize>) -> Result<Vec<SweepPoint>> {
    if n_values.is_empty() {
        return Err(Error::invalid("sweep needs at least one N value"));
    }
    if n_values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("sweep N values must be strictly increasing"));
    }
    n_values
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let cfg = sweep_config(base, k, n)?;
            let (_, m) = simulate(&cfg, workers)?;
            Ok(SweepPoint { n, sigma: m.sigma(), sigma_stderr: m.sigma_stderr() })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    pub a_stderr: f64,
    pub b_stderr: f64,
    /// Euclidean norm of the residuals.
    pub residual_norm: f64,
}

/// Ordinary least squares of `σ` on `(√N, 1)`.
pub fn fit_sqrt_law(points: &[SweepPoint]) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::invalid(format!("fit needs at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|p| !(p.n >= 0.0) || !p.sigma.is_finite()) {
        return Err(Error::invalid("fit points need N >= 0 and finite sigma"));
    }
    let m = points.len() as f64;
    let u: Vec<f64> = points.iter().map(|p| p.n.sqrt()).collect();
    let u_mean = u.iter().sum::<f64>() / m;
    let s_mean = points.iter().map(|p| p.sigma).sum::<f64>() / m;
    let suu: f64 = u.iter().map(|x| (x - u_mean).powi(2)).sum();
    if !(suu > 1e-12 * u_mean.max(1.0).powi(2) * m) {
        return Err(Error::invalid("degenerate design: all N values are equal"));
    }
    let sus: f64 = u.iter().zip(points).map(|(x, p)| (x - u_mean) * (p.sigma - s_mean)).sum();
    let a = sus / suu;
    let b = s_mean - a * u_mean;
    let rss: f64 = u.iter().zip(points).map(|(x, p)| (p.sigma - a * x - b).powi(2)).sum();
    let s2 = rss / (m - 2.0);
    Ok(FitResult {
        a,
        b,
        a_stderr: (s2 / suu).sqrt(),
        b_stderr: (s2 * (1.0 / m + u_mean * u_mean / suu)).sqrt(),
        residual_norm: rss.sqrt(),
    })
}

/// The trivial drift point used throughout the monopole experiments,
/// `cos θ₀ = 1/√3`, `φ₀ = 0`.
pub fn reference_colatitude() -> f64 {
    (1.0 / 3.0f64.sqrt()).acos()
}

/// Noiseless precession about z starting at `(θ₀, φ₀)`.
pub fn precession(theta0: f64, phi0: f64, turns: u32) -> DriftLoop {
    DriftLoop::Precession { theta0, phi0, turns }
}

pub fn trivial(theta0: f64, phi0: f64) -> DriftLoop {
    DriftLoop::trivial_at(theta0, phi0)
}

pub fn origin() -> DriftLoop {
    DriftLoop::Trivial { point: Vec3::zeros() }
}
