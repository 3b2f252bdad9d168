//! Time grids, noise processes, drift loops and their composition.
//!
//! Every random path is a pure function of its [`RngStream`]. Variates are
//! drawn node by node, axis by axis (x, y, z), from a ChaCha8 generator keyed
//! by the master seed and positioned on the stream's own 64-bit stream id, so
//! a trajectory never depends on which thread produced it or in what order.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result, Vec3};

/// Uniform grid of `steps + 1` node times on `[0, total_time]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    total_time: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(total_time: f64, steps: usize) -> Result<Self> {
        if !(total_time.is_finite() && total_time > 0.0) {
            return Err(Error::invalid(format!(
                "total time must be positive and finite, got {total_time}"
            )));
        }
        if steps == 0 {
            return Err(Error::invalid("time grid needs at least one step"));
        }
        Ok(TimeGrid { total_time, steps })
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn node_count(&self) -> usize {
        self.steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.total_time / self.steps as f64
    }

    /// `t_j = j T / steps`; the last node is exactly `T`.
    pub fn node_time(&self, j: usize) -> f64 {
        if j == self.steps {
            self.total_time
        } else {
            j as f64 * self.total_time / self.steps as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|j| self.node_time(j))
    }
}

/// Shorthand for [`TimeGrid::new`].
pub fn make_time_grid(total_time: f64, steps: usize) -> Result<TimeGrid> {
    TimeGrid::new(total_time, steps)
}

/// Per-axis diffusion constants of a Wiener process: `Var x(t) = B_x t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WienerParams {
    pub bx: f64,
    pub by: f64,
    pub bz: f64,
}

impl WienerParams {
    pub fn new(bx: f64, by: f64, bz: f64) -> Result<Self> {
        for (name, b) in [("Bx", bx), ("By", by), ("Bz", bz)] {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {b}")));
            }
        }
        Ok(WienerParams { bx, by, bz })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.bx, self.by, self.bz]
    }
}

/// Isotropic Ornstein–Uhlenbeck noise `dx = -Γ x dt + √D dW` on every axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParams {
    gamma: f64,
    diffusion: f64,
}

impl OuParams {
    pub fn new(gamma: f64, diffusion: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::invalid(format!("OU relaxation rate must be > 0, got {gamma}")));
        }
        if !(diffusion.is_finite() && diffusion >= 0.0) {
            return Err(Error::invalid(format!("OU diffusion must be >= 0, got {diffusion}")));
        }
        Ok(OuParams { gamma, diffusion })
    }

    /// Parameterise by the stationary amplitude `ε` instead of `D = 2Γε²`.
    pub fn from_epsilon(gamma: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::invalid(format!("OU amplitude must be >= 0, got {epsilon}")));
        }
        Self::new(gamma, 2.0 * gamma * epsilon * epsilon)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    /// Stationary variance `ε² = D / 2Γ`.
    pub fn epsilon_sq(&self) -> f64 {
        self.diffusion / (2.0 * self.gamma)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon_sq().sqrt()
    }
}

/// Starting state of an OU path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OuInit {
    /// `x(0) ~ N(0, ε²)` on each axis.
    #[default]
    Stationary,
    /// `x(0) = 0`.
    Origin,
}

/// Noiseless component of the trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftLoop {
    Trivial { point: Vec3 },
    /// Precession about the z axis on the unit sphere at fixed colatitude,
    /// `turns` full revolutions over the operational time.
    Precession { theta0: f64, phi0: f64, turns: u32 },
}

impl DriftLoop {
    /// Trivial loop parked at the unit-sphere point `(θ₀, φ₀)`.
    pub fn trivial_at(theta0: f64, phi0: f64) -> Self {
        DriftLoop::Trivial { point: unit_sphere_point(theta0, phi0) }
    }

    pub fn position(&self, t: f64, total_time: f64) -> Result<Vec3> {
        drift_position(self, t, total_time)
    }
}

pub(crate) fn unit_sphere_point(theta: f64, phi: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(st * cp, st * sp, ct)
}

pub fn drift_position(drift: &DriftLoop, t: f64, total_time: f64) -> Result<Vec3> {
    if !(total_time > 0.0) {
        return Err(Error::invalid(format!("total time must be > 0, got {total_time}")));
    }
    if !(0.0..=total_time).contains(&t) {
        return Err(Error::invalid(format!("time {t} outside [0, {total_time}]")));
    }
    Ok(match *drift {
        DriftLoop::Trivial { point } => point,
        DriftLoop::Precession { theta0, phi0, turns } => {
            let phi = phi0 + TAU * turns as f64 * t / total_time;
            unit_sphere_point(theta0, phi)
        }
    })
}

/// Source of randomness for one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RngStream { master_seed, stream_index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Positions sampled on a time grid. Used both for the bare noise component
/// and for the composed drift + noise trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    grid: TimeGrid,
    points: Vec<Vec3>,
}

pub type NoisePath = Path;
pub type Trajectory = Path;

impl Path {
    pub fn new(grid: TimeGrid, points: Vec<Vec3>) -> Result<Self> {
        if points.len() != grid.node_count() {
            return Err(Error::invalid(format!(
                "path has {} points but the grid has {} nodes",
                points.len(),
                grid.node_count()
            )));
        }
        if let Some(j) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::invalid(format!("non-finite coordinate at node {j}")));
        }
        Ok(Path { grid, points })
    }

    /// Drift loop sampled at the grid nodes.
    pub fn from_drift(drift: &DriftLoop, grid: TimeGrid) -> Self {
        let t_total = grid.total_time();
        let points = grid
            .nodes()
            .map(|t| drift_position(drift, t, t_total).expect("grid nodes lie in [0, T]"))
            .collect();
        Path { grid, points }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn start(&self) -> Vec3 {
        self.points[0]
    }

    pub fn end(&self) -> Vec3 {
        self.points[self.points.len() - 1]
    }

    /// Same nodes traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Path { grid: self.grid, points }
    }
}

fn normal3(rng: &mut ChaCha8Rng) -> Vec3 {
    let x: f64 = StandardNormal.sample(rng);
    let y: f64 = StandardNormal.sample(rng);
    let z: f64 = StandardNormal.sample(rng);
    Vec3::new(x, y, z)
}

/// Brownian motion from the origin with independent axes and increments
/// `N(0, B_axis dt)`.
pub fn sample_wiener_path(grid: TimeGrid, params: WienerParams, stream: RngStream) -> NoisePath {
    let mut rng = stream.rng();
    let dt = grid.dt();
    let scale = Vec3::from(params.as_array().map(|b| (b * dt).sqrt()));
    let mut points = Vec::with_capacity(grid.node_count());
    let mut current = Vec3::zeros();
    points.push(current);
    for _ in 0..grid.steps() {
        current += normal3(&mut rng).component_mul(&scale);
        points.push(current);
    }
    Path { grid, points }
}

/// OU path via the exact conditional update
/// `x(t+dt) = x(t) e^{-Γdt} + ε √(1 - e^{-2Γdt}) ξ`.
pub fn sample_ou_path(grid: TimeGrid, params: OuParams, stream: RngStream, init: OuInit) -> NoisePath {
    let mut rng = stream.rng();
    let eps = params.epsilon();
    let decay = (-params.gamma() * grid.dt()).exp();
    let kick = eps * (-(-2.0 * params.gamma() * grid.dt()).exp_m1()).sqrt();
    let mut points = Vec::with_capacity(grid.node_count());
    let mut current = match init {
        OuInit::Stationary => normal3(&mut rng) * eps,
        OuInit::Origin => Vec3::zeros(),
    };
    points.push(current);
    for _ in 0..grid.steps() {
        current = current * decay + normal3(&mut rng) * kick;
        points.push(current);
    }
    Path { grid, points }
}

/// `r(t) = r₀(t) + r_n(t)` at every node of the noise grid.
pub fn compose_trajectory(drift: &DriftLoop, noise: NoisePath) -> Result<Trajectory> {
    let grid = noise.grid;
    if noise.points.len() != grid.node_count() {
        return Err(Error::invalid("noise path does not match its grid"));
    }
    let t_total = grid.total_time();
    let mut points = noise.points;
    match drift {
        DriftLoop::Trivial { point } => points.iter_mut().for_each(|p| *p += point),
        DriftLoop::Precession { .. } => {
            for (j, p) in points.iter_mut().enumerate() {
                *p += drift_position(drift, grid.node_time(j), t_total)?;
            }
        }
    }
    Ok(Path { grid, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_nodes() {
        let g = make_time_grid(1.0, 4).unwrap();
        assert_eq!(g.dt(), 0.25);
        assert_eq!(g.nodes().collect::<Vec<_>>(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);

        let g = make_time_grid(2.0, 1).unwrap();
        assert_eq!(g.dt(), 2.0);
        assert_eq!(g.nodes().collect::<Vec<_>>(), vec![0.0, 2.0]);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(matches!(make_time_grid(1.0, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(make_time_grid(0.0, 4), Err(Error::InvalidArgument(_))));
        assert!(matches!(make_time_grid(-1.0, 4), Err(Error::InvalidArgument(_))));
        assert!(matches!(make_time_grid(f64::NAN, 4), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn zero_diffusion_wiener_stays_at_origin() {
        let g = make_time_grid(1.0, 50).unwrap();
        let p = sample_wiener_path(g, WienerParams::new(0.0, 0.0, 0.0).unwrap(), RngStream::new(1, 2));
        assert_eq!(p.points().len(), 51);
        assert!(p.points().iter().all(|v| *v == Vec3::zeros()));
    }

    #[test]
    fn zero_amplitude_ou_is_zero() {
        let g = make_time_grid(3.0, 30).unwrap();
        let params = OuParams::new(2.0, 0.0).unwrap();
        let p = sample_ou_path(g, params, RngStream::new(9, 0), OuInit::Stationary);
        assert!(p.points().iter().all(|v| *v == Vec3::zeros()));
    }

    #[test]
    fn ou_rejects_nonpositive_rate() {
        assert!(OuParams::new(0.0, 1.0).is_err());
        assert!(OuParams::new(-1.0, 1.0).is_err());
        assert!(OuParams::from_epsilon(-1.0, 0.1).is_err());
    }

    #[test]
    fn epsilon_round_trip() {
        let p = OuParams::from_epsilon(50.0, 0.1).unwrap();
        assert!((p.diffusion() - 1.0).abs() < 1e-12);
        assert!((p.epsilon_sq() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn precession_positions() {
        let (theta0, phi0) = (0.9_f64, 0.3_f64);
        let d = DriftLoop::Precession { theta0, phi0, turns: 1 };
        let p0 = drift_position(&d, 0.0, 2.0).unwrap();
        let expect = Vec3::new(theta0.sin() * phi0.cos(), theta0.sin() * phi0.sin(), theta0.cos());
        assert!((p0 - expect).norm() < 1e-15);

        let d = DriftLoop::Precession { theta0, phi0: 0.0, turns: 1 };
        let half = drift_position(&d, 1.0, 2.0).unwrap();
        assert!((half - Vec3::new(-theta0.sin(), 0.0, theta0.cos())).norm() < 1e-15);

        // closed loop
        let end = drift_position(&d, 2.0, 2.0).unwrap();
        assert!((end - drift_position(&d, 0.0, 2.0).unwrap()).norm() < 1e-14);

        assert!(drift_position(&d, 2.5, 2.0).is_err());
        assert!(drift_position(&d, -0.1, 2.0).is_err());
    }

    #[test]
    fn trivial_drift_is_constant() {
        let point = Vec3::new(0.1, -2.0, 3.0);
        let d = DriftLoop::Trivial { point };
        for t in [0.0, 0.4, 1.0] {
            assert_eq!(drift_position(&d, t, 1.0).unwrap(), point);
        }
    }

    #[test]
    fn composition() {
        let g = make_time_grid(1.0, 20).unwrap();
        let params = WienerParams::new(1.0, 2.0, 0.5).unwrap();
        let noise = sample_wiener_path(g, params, RngStream::new(4, 4));

        // zero noise gives the sampled drift
        let d = DriftLoop::Precession { theta0: 1.0, phi0: 0.0, turns: 2 };
        let zero = Path::new(g, vec![Vec3::zeros(); 21]).unwrap();
        assert_eq!(compose_trajectory(&d, zero).unwrap(), Path::from_drift(&d, g));

        // drift at the origin gives the noise
        let origin = DriftLoop::Trivial { point: Vec3::zeros() };
        assert_eq!(compose_trajectory(&origin, noise.clone()).unwrap(), noise);

        let p = Vec3::new(1.0, 2.0, 3.0);
        let traj = compose_trajectory(&DriftLoop::Trivial { point: p }, noise.clone()).unwrap();
        for (a, b) in traj.points().iter().zip(noise.points()) {
            assert_eq!(*a, p + b);
        }
    }

    #[test]
    fn path_length_must_match_grid() {
        let g = make_time_grid(1.0, 3).unwrap();
        assert!(Path::new(g, vec![Vec3::zeros(); 3]).is_err());
        assert!(Path::new(g, vec![Vec3::new(f64::NAN, 0.0, 0.0); 4]).is_err());
    }

    #[test]
    fn unit_sphere() {
        let v = unit_sphere_point(PI / 2.0, 0.0);
        assert!((v - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn streams_are_pure(seed in any::<u64>(), index in any::<u64>(), steps in 1usize..40) {
            let g = make_time_grid(1.5, steps).unwrap();
            let ou = OuParams::new(1.3, 0.7).unwrap();
            let s = RngStream::new(seed, index);
            prop_assert_eq!(
                sample_ou_path(g, ou, s, OuInit::Stationary),
                sample_ou_path(g, ou, s, OuInit::Stationary)
            );
            let w = WienerParams::new(1.0, 0.5, 2.0).unwrap();
            prop_assert_eq!(sample_wiener_path(g, w, s), sample_wiener_path(g, w, s));
        }

        #[test]
        fn precession_stays_on_sphere(theta0 in 0.01f64..3.13, phi0 in -6.0f64..6.0, turns in 1u32..5, frac in 0.0f64..=1.0) {
            let d = DriftLoop::Precession { theta0, phi0, turns };
            let r = drift_position(&d, frac * 3.0, 3.0).unwrap();
            prop_assert!((r.norm() - 1.0).abs() < 1e-12);
        }
    }
}
