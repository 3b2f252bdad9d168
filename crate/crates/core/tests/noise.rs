//! Sample statistics of the noise generators against their closed forms.

use dirac_phase::paths::{
    make_time_grid, sample_ou_path, sample_wiener_path, OuInit, OuParams, RngStream, WienerParams,
};

const PATHS: u64 = 20_000;

fn var(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Zero-mean sample covariance.
fn cov0(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

/// Standard error of a sample variance of Gaussians.
fn var_se(v: f64, n: usize) -> f64 {
    v * (2.0 / n as f64).sqrt()
}

#[test]
fn wiener_terminal_variance_per_axis() {
    let (t, b) = (2.0, [1.0, 0.5, 2.0]);
    let params = WienerParams::new(b[0], b[1], b[2]).unwrap();
    let grid = make_time_grid(t, 50).unwrap();
    let ends: Vec<_> = (0..PATHS).map(|i| sample_wiener_path(grid, params, RngStream::new(7, i)).end()).collect();
    for axis in 0..3 {
        let xs: Vec<f64> = ends.iter().map(|e| e[axis]).collect();
        let expected = b[axis] * t;
        let v = var(&xs);
        assert!((v - expected).abs() < 4.0 * var_se(expected, xs.len()), "axis {axis}: {v} vs {expected}");
    }
    // independent axes
    let x: Vec<f64> = ends.iter().map(|e| e.x).collect();
    let z: Vec<f64> = ends.iter().map(|e| e.z).collect();
    let rho = cov0(&x, &z) / (var(&x) * var(&z)).sqrt();
    assert!(rho.abs() < 4.0 / (PATHS as f64).sqrt(), "corr {rho}");
}

#[test]
fn wiener_increments_are_uncorrelated() {
    let params = WienerParams::new(1.0, 1.0, 1.0).unwrap();
    let grid = make_time_grid(1.0, 100).unwrap();
    let (mut prev, mut next) = (Vec::new(), Vec::new());
    for i in 0..2_000 {
        let p = sample_wiener_path(grid, params, RngStream::new(8, i));
        let dx: Vec<f64> = p.points().windows(2).map(|w| w[1].y - w[0].y).collect();
        for w in dx.windows(2) {
            prev.push(w[0]);
            next.push(w[1]);
        }
    }
    let rho = cov0(&prev, &next) / (var(&prev) * var(&next)).sqrt();
    assert!(rho.abs() < 4.0 / (prev.len() as f64).sqrt(), "lag-1 corr {rho}");
    assert!((var(&prev) - grid.dt()).abs() < 4.0 * var_se(grid.dt(), prev.len()));
}

#[test]
fn wiener_terminal_law_ignores_refinement() {
    // Var x(T) = B T whatever the step count; the finer grid is not a worse
    // estimate of the same law.
    let params = WienerParams::new(1.0, 0.0, 0.0).unwrap();
    for steps in [1, 10, 1000] {
        let grid = make_time_grid(1.5, steps).unwrap();
        let xs: Vec<f64> = (0..5_000).map(|i| sample_wiener_path(grid, params, RngStream::new(9, i)).end().x).collect();
        let v = var(&xs);
        assert!((v - 1.5).abs() < 4.0 * var_se(1.5, xs.len()), "steps {steps}: {v}");
        // zero diffusion leaves the axis untouched
        assert_eq!(sample_wiener_path(grid, params, RngStream::new(9, 0)).end().y, 0.0);
    }
}

#[test]
fn ou_stationary_variance_and_autocovariance() {
    let (gamma, eps) = (2.0, 0.3);
    let params = OuParams::from_epsilon(gamma, eps).unwrap();
    let grid = make_time_grid(2.0, 40).unwrap();
    let e2 = eps * eps;
    let paths: Vec<_> = (0..PATHS).map(|i| sample_ou_path(grid, params, RngStream::new(11, i), OuInit::Stationary)).collect();
    let at = |j: usize| paths.iter().map(|p| p.points()[j].x).collect::<Vec<f64>>();
    let x0 = at(0);
    for j in [0, 10, 40] {
        let xj = at(j);
        assert!((var(&xj) - e2).abs() < 4.0 * var_se(e2, xj.len()), "node {j}: {}", var(&xj));
        // ⟨x(0)x(t)⟩ = ε² e^{-Γt}, stderr of the product mean bounded by ε²√((1+ρ²)/M)
        let expected = e2 * (-gamma * grid.node_time(j)).exp();
        let c = cov0(&x0, &xj);
        assert!((c - expected).abs() < 4.0 * e2 * (2.0 / PATHS as f64).sqrt(), "lag {j}: {c} vs {expected}");
    }
}

#[test]
fn ou_from_origin_relaxes_to_stationary() {
    let (gamma, eps) = (1.0, 0.5);
    let params = OuParams::from_epsilon(gamma, eps).unwrap();
    let grid = make_time_grid(1.0, 20).unwrap();
    let ends: Vec<f64> =
        (0..PATHS).map(|i| sample_ou_path(grid, params, RngStream::new(12, i), OuInit::Origin).end().z).collect();
    let expected = eps * eps * (1.0 - (-2.0 * gamma).exp());
    assert!((var(&ends) - expected).abs() < 4.0 * var_se(expected, ends.len()));
    let start = sample_ou_path(grid, params, RngStream::new(12, 0), OuInit::Origin).start();
    assert_eq!(start.norm(), 0.0);
}

#[test]
fn ou_step_size_does_not_bias_the_law() {
    // the exact update has no discretisation error: one step of length T
    // gives the same autocovariance as many small ones
    let (gamma, eps) = (3.0, 1.0);
    let params = OuParams::from_epsilon(gamma, eps).unwrap();
    for steps in [1, 100] {
        let grid = make_time_grid(0.5, steps).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for i in 0..PATHS {
            let p = sample_ou_path(grid, params, RngStream::new(13, i), OuInit::Stationary);
            a.push(p.start().y);
            b.push(p.end().y);
        }
        let expected = (-gamma * 0.5f64).exp();
        let c = cov0(&a, &b);
        assert!((c - expected).abs() < 4.0 * (2.0 / PATHS as f64).sqrt(), "steps {steps}: {c} vs {expected}");
    }
}
