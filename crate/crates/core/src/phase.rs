//! Itô line integral, straight-chord closure and the gauge-invariant phase.
//!
//! Sign convention: the phase angle is
//!
//! ```text
//! φ_g = -coupling · ( Σ_j A(r_j)·(r_{j+1} - r_j)  +  ∫_chord A·dr )
//! ```
//!
//! where the chord runs from `r(T)` back to `r(0)`. With the default
//! `coupling = 1` and `A = (-yB, 0, 0)` this is `∫ y dx + ½ΔΣ` for `B = 1`,
//! and for the linearized monopole it is `-∫A_L·dr` plus the closed-form
//! closure term of [`closure_linearized`]. Second moments do not depend on
//! the sign.

use crate::fields::{FieldModel, LinearCoefficients};
use crate::paths::Trajectory;
use crate::{Error, Result, Vec3};

pub const DEFAULT_CLOSURE_PANELS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseConvention {
    pub coupling: f64,
    /// Midpoint panels for the chord integral of non-affine potentials.
    pub closure_panels: usize,
}

impl Default for PhaseConvention {
    fn default() -> Self {
        PhaseConvention { coupling: 1.0, closure_panels: DEFAULT_CLOSURE_PANELS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSample {
    pub open_path_integral: f64,
    pub closure_integral: f64,
    pub phase: f64,
    /// `r(0) - r(T)`.
    pub delta: Vec3,
    /// `y(0) + y(T)`.
    pub sigma: f64,
}

/// Left-endpoint sum `Σ_j A(r_j)·(r_{j+1} - r_j)`.
pub fn ito_line_integral(field: &FieldModel, traj: &Trajectory) -> Result<f64> {
    let pts = traj.points();
    match *field {
        FieldModel::UniformAsymmetric { b } => {
            Ok(pts.windows(2).map(|w| -b * w[0].y * (w[1].x - w[0].x)).sum())
        }
        _ => {
            let mut acc = 0.0;
            for (j, w) in pts.windows(2).enumerate() {
                let a = field.potential(&w[0]).map_err(|e| e.at_node(j))?;
                acc += a.dot(&(w[1] - w[0]));
            }
            Ok(acc)
        }
    }
}

/// Line integral of `A` along the straight segment from `r_end` to `r_start`.
///
/// Affine potentials are integrated exactly; the monopole uses the midpoint
/// rule with `panels` panels and fails if any midpoint is in the singular
/// region (the error's node index is the panel).
pub fn geodesic_closure(field: &FieldModel, r_end: &Vec3, r_start: &Vec3, panels: usize) -> Result<f64> {
    if panels == 0 {
        return Err(Error::invalid("closure quadrature needs at least one panel"));
    }
    let chord = r_start - r_end;
    match *field {
        FieldModel::UniformAsymmetric { b } => {
            let delta = r_start.x - r_end.x;
            let sigma = r_start.y + r_end.y;
            Ok(-b * delta * sigma / 2.0)
        }
        FieldModel::UniformSymmetric { .. } => {
            let mid = (r_start + r_end) / 2.0;
            Ok(field.potential(&mid)?.dot(&chord))
        }
        FieldModel::LinearizedMonopole { base, coeffs } => {
            Ok(-closure_linearized(&coeffs.rebased(base, *r_start), r_start, r_end))
        }
        FieldModel::Monopole { .. } => midpoint_chord(field, r_end, r_start, panels),
    }
}

pub(crate) fn midpoint_chord(field: &FieldModel, r_end: &Vec3, r_start: &Vec3, panels: usize) -> Result<f64> {
    if r_end == r_start {
        return Ok(0.0);
    }
    let chord = r_start - r_end;
    if let FieldModel::Monopole { rho_min } = *field {
        check_chord_off_axis(r_end, &chord, rho_min, panels)?;
    }
    let h = 1.0 / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let s = (k as f64 + 0.5) * h;
        let a = field.potential(&(r_end + chord * s)).map_err(|e| e.at_node(k))?;
        acc += a.dot(&chord);
    }
    Ok(acc * h)
}

/// Fails if the segment `r_end + s·chord`, `s ∈ [0, 1]`, comes closer than
/// `rho_min` to the z axis anywhere, not only at quadrature nodes.
fn check_chord_off_axis(r_end: &Vec3, chord: &Vec3, rho_min: f64, panels: usize) -> Result<()> {
    let (px, py, dx, dy) = (r_end.x, r_end.y, chord.x, chord.y);
    let dd = dx * dx + dy * dy;
    let s = if dd > 0.0 { (-(px * dx + py * dy) / dd).clamp(0.0, 1.0) } else { 0.0 };
    let (cx, cy) = (px + s * dx, py + s * dy);
    if cx * cx + cy * cy < rho_min * rho_min {
        let closest = r_end + chord * s;
        let node = ((s * panels as f64) as usize).min(panels - 1);
        return Err(Error::SingularRegion { node, point: [closest.x, closest.y, closest.z] });
    }
    Ok(())
}

/// Closure contribution to the phase for an affine potential whose
/// coefficients are expanded about `r_start`:
///
/// `[f₀ - ½ f·Δ] Δ_x - [g₀ - ½ g·Δ] Δ_y` with `Δ = r_start - r_end`.
pub fn closure_linearized(coeffs: &LinearCoefficients, r_start: &Vec3, r_end: &Vec3) -> f64 {
    let d = r_start - r_end;
    (coeffs.f0 - 0.5 * coeffs.f_grad().dot(&d)) * d.x - (coeffs.g0 - 0.5 * coeffs.g_grad().dot(&d)) * d.y
}

pub fn gauge_invariant_phase(field: &FieldModel, traj: &Trajectory, conv: &PhaseConvention) -> Result<PhaseSample> {
    let open = ito_line_integral(field, traj)?;
    let (start, end) = (traj.start(), traj.end());
    let closure = geodesic_closure(field, &end, &start, conv.closure_panels)
        .map_err(|e| e.at_node(traj.grid().steps()))?;
    Ok(PhaseSample {
        open_path_integral: open,
        closure_integral: closure,
        phase: -conv.coupling * (open + closure),
        delta: start - end,
        sigma: start.y + end.y,
    })
}
