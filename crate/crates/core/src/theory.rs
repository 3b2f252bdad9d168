//! Closed-form predictions for the phase moments.
//!
//! The published formulas are reported as stated. Where an independent
//! derivation disagrees, the alternative lives next to it under its own name
//! and the Monte Carlo estimate decides which one the data supports.

use std::f64::consts::TAU;

use crate::fields::LinearCoefficients;
use crate::{Error, Result};

/// `e^{-ΓT}` above which the OU asymptotic formula is flagged.
pub const OU_REGIME_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticMoments {
    pub mean: f64,
    pub variance: f64,
    /// Set when the inputs are outside the regime the formula assumes.
    pub regime_warning: bool,
    pub note: &'static str,
}

impl AnalyticMoments {
    fn exact(mean: f64, variance: f64) -> Self {
        AnalyticMoments { mean, variance, regime_warning: false, note: "" }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")))
    }
}

/// Uniform field, Wiener noise: mean 0, variance `¼ B_x B_y T²`.
pub fn wiener_uniform_moments(bx: f64, by: f64, total_time: f64) -> Result<AnalyticMoments> {
    nonneg("Bx", bx)?;
    nonneg("By", by)?;
    positive("T", total_time)?;
    Ok(AnalyticMoments::exact(0.0, 0.25 * bx * by * total_time * total_time))
}

/// Uniform field, stationary OU noise: published asymptotic variance
/// `2 ε⁴ (ΓT + 1)`, valid for `e^{-ΓT} → 0`.
///
/// The continuum limit of the left-endpoint sum gives a leading slope of
/// `ε⁴ Γ T` rather than `2 ε⁴ Γ T`; see [`ou_uniform_leading_variance`].
pub fn ou_uniform_variance(epsilon: f64, gamma: f64, total_time: f64) -> Result<AnalyticMoments> {
    nonneg("epsilon", epsilon)?;
    positive("gamma", gamma)?;
    positive("T", total_time)?;
    let n = gamma * total_time;
    let eps4 = epsilon.powi(4);
    Ok(AnalyticMoments {
        mean: 0.0,
        variance: 2.0 * eps4 * (n + 1.0),
        regime_warning: (-n).exp() > OU_REGIME_THRESHOLD,
        note: "asymptotic in exp(-gamma T) -> 0; leading constant unconfirmed",
    })
}

/// Leading-order growth `ε⁴ Γ T` of the same variance, from summing the
/// stationary correlations `⟨y_i y_j⟩⟨Δx_i Δx_j⟩` of the discrete sum and
/// letting the step go to zero. Boundary terms of order `ε⁴` are dropped.
pub fn ou_uniform_leading_variance(epsilon: f64, gamma: f64, total_time: f64) -> Result<AnalyticMoments> {
    nonneg("epsilon", epsilon)?;
    positive("gamma", gamma)?;
    positive("T", total_time)?;
    let n = gamma * total_time;
    Ok(AnalyticMoments {
        mean: 0.0,
        variance: epsilon.powi(4) * n,
        regime_warning: (-n).exp() > OU_REGIME_THRESHOLD,
        note: "leading order in gamma T only",
    })
}

fn check_diffusions(bx: f64, by: f64, bz: f64, total_time: f64) -> Result<()> {
    nonneg("Bx", bx)?;
    nonneg("By", by)?;
    nonneg("Bz", bz)?;
    positive("T", total_time)
}

/// Linearized monopole, Wiener noise, trivial drift, published form:
/// mean `½(g_y B_y - f_x B_x) T`, variance `¼ 𝓑 T²` with
/// `𝓑 = B_x(3B_x f_x² + 2B_y f_y² + 2B_z f_z²) + B_y(2B_x g_x² + 3B_y g_y² + 2B_z g_z²)`.
pub fn monopole_wiener_moments(
    k: &LinearCoefficients,
    bx: f64,
    by: f64,
    bz: f64,
    total_time: f64,
) -> Result<AnalyticMoments> {
    check_diffusions(bx, by, bz, total_time)?;
    let curly_b = bx * (3.0 * bx * k.fx.powi(2) + 2.0 * by * k.fy.powi(2) + 2.0 * bz * k.fz.powi(2))
        + by * (2.0 * bx * k.gx.powi(2) + 3.0 * by * k.gy.powi(2) + 2.0 * bz * k.gz.powi(2));
    Ok(AnalyticMoments::exact(
        0.5 * (k.gy * by - k.fx * bx) * total_time,
        0.25 * curly_b * total_time * total_time,
    ))
}

/// Same setting, variance from the Lévy-area decomposition of the Itô sum
/// plus chord closure:
///
/// `φ - ⟨φ⟩ = -(f_y + g_x) L_xy - f_z L_xz + g_z L_yz`
///
/// with independent Lévy areas of variance `¼ B_a B_b T²`. The `f_x`, `g_y`
/// terms are deterministic in the continuum limit and only shift the mean.
/// Reduces to `¼ B_x B_y T²` for the uniform field.
pub fn monopole_wiener_area_moments(
    k: &LinearCoefficients,
    bx: f64,
    by: f64,
    bz: f64,
    total_time: f64,
) -> Result<AnalyticMoments> {
    check_diffusions(bx, by, bz, total_time)?;
    let weight = (k.fy + k.gx).powi(2) * bx * by + k.fz.powi(2) * bx * bz + k.gz.powi(2) * by * bz;
    Ok(AnalyticMoments::exact(
        0.5 * (k.gy * by - k.fx * bx) * total_time,
        0.25 * weight * total_time * total_time,
    ))
}

/// Loop integral of the monopole potential around the precession circle at
/// colatitude `θ₀`: the enclosed solid angle `2π(1 - cos θ₀)`.
pub fn noiseless_precession_phase(theta0: f64) -> Result<f64> {
    if !(theta0 > 0.0 && theta0 < std::f64::consts::PI) {
        return Err(Error::invalid(format!("colatitude must lie in (0, π), got {theta0}")));
    }
    Ok(TAU * (1.0 - theta0.cos()))
}
