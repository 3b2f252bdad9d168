//! Vector-potential models.
//!
//! All fields are in dimensionless units with the monopole charge set to one.
//! The monopole potential is the Cartesian form
//!
//! ```text
//! A·dr = (1 - z/R) / (x² + y²) · (-y dx + x dy)
//! ```
//!
//! whose Dirac string runs along the negative z axis. Its curl is `r / R³`.

use crate::{Error, Result, Vec3};

/// Default exclusion radius around the polar axis for the monopole potential.
pub const DEFAULT_RHO_MIN: f64 = 1e-6;

/// First-order Taylor coefficients of the monopole potential about a base
/// point: `A_L·dr = -[f₀ + f·δr] dx + [g₀ + g·δr] dy`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearCoefficients {
    pub f0: f64,
    pub fx: f64,
    pub fy: f64,
    pub fz: f64,
    pub g0: f64,
    pub gx: f64,
    pub gy: f64,
    pub gz: f64,
}

impl LinearCoefficients {
    pub fn f_grad(&self) -> Vec3 {
        Vec3::new(self.fx, self.fy, self.fz)
    }

    pub fn g_grad(&self) -> Vec3 {
        Vec3::new(self.gx, self.gy, self.gz)
    }

    /// Same affine potential, re-expanded about `to` instead of `from`.
    pub fn rebased(&self, from: Vec3, to: Vec3) -> Self {
        let shift = to - from;
        LinearCoefficients {
            f0: self.f0 + self.f_grad().dot(&shift),
            g0: self.g0 + self.g_grad().dot(&shift),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldModel {
    /// `A = (-yB, 0, 0)`.
    UniformAsymmetric { b: f64 },
    /// `A = (-yB/2, xB/2, 0)`.
    UniformSymmetric { b: f64 },
    Monopole { rho_min: f64 },
    LinearizedMonopole { base: Vec3, coeffs: LinearCoefficients },
}

impl FieldModel {
    pub fn monopole() -> Self {
        FieldModel::Monopole { rho_min: DEFAULT_RHO_MIN }
    }

    /// Linearization of the default monopole about `base`.
    pub fn linearized_monopole(base: Vec3) -> Result<Self> {
        Ok(FieldModel::LinearizedMonopole { base, coeffs: linearize_monopole(base)? })
    }

    /// Whether the potential is an affine function of position.
    pub fn is_affine(&self) -> bool {
        !matches!(self, FieldModel::Monopole { .. })
    }

    /// Potential at `r`. Singular-region errors carry node index 0; callers
    /// iterating over a path re-tag them.
    pub fn potential(&self, r: &Vec3) -> Result<Vec3> {
        match *self {
            FieldModel::UniformAsymmetric { b } => Ok(Vec3::new(-r.y * b, 0.0, 0.0)),
            FieldModel::UniformSymmetric { b } => Ok(Vec3::new(-0.5 * r.y * b, 0.5 * r.x * b, 0.0)),
            FieldModel::Monopole { rho_min } => {
                let c = monopole_prefactor(r, rho_min)?;
                Ok(Vec3::new(-c * r.y, c * r.x, 0.0))
            }
            FieldModel::LinearizedMonopole { base, coeffs } => {
                let d = r - base;
                Ok(Vec3::new(
                    -(coeffs.f0 + coeffs.f_grad().dot(&d)),
                    coeffs.g0 + coeffs.g_grad().dot(&d),
                    0.0,
                ))
            }
        }
    }
}

/// Evaluate the vector potential of `field` at `r`.
pub fn evaluate_potential(field: &FieldModel, r: &Vec3) -> Result<Vec3> {
    field.potential(r)
}

fn check_off_axis(r: &Vec3, rho_min: f64) -> Result<()> {
    let rho_sq = r.x * r.x + r.y * r.y;
    if !(rho_sq >= rho_min * rho_min) || !r.iter().all(|c| c.is_finite()) {
        return Err(Error::SingularRegion { node: 0, point: [r.x, r.y, r.z] });
    }
    Ok(())
}

/// `c(r) = (1 - z/R)/(x² + y²)`, evaluated as `1 / (R (R + z))` to avoid the
/// cancellation in `1 - z/R` near the upper half of the axis.
fn monopole_prefactor(r: &Vec3, rho_min: f64) -> Result<f64> {
    check_off_axis(r, rho_min)?;
    let big_r = r.norm();
    Ok(1.0 / (big_r * (big_r + r.z)))
}

/// Value and gradient of `f = c·y` and `g = c·x` at `base`.
pub fn linearize_monopole(base: Vec3) -> Result<LinearCoefficients> {
    let c = monopole_prefactor(&base, DEFAULT_RHO_MIN)?;
    let (x, y, z) = (base.x, base.y, base.z);
    let big_r = base.norm();
    // c = 1/u with u = R² + R z
    let du = Vec3::new(x * (2.0 + z / big_r), y * (2.0 + z / big_r), 2.0 * z + z * z / big_r + big_r);
    let grad_c = -du * (c * c);
    Ok(LinearCoefficients {
        f0: c * y,
        fx: y * grad_c.x,
        fy: c + y * grad_c.y,
        fz: y * grad_c.z,
        g0: c * x,
        gx: c + x * grad_c.x,
        gy: x * grad_c.y,
        gz: x * grad_c.z,
    })
}

/// Central-difference curl of the potential at `r` with step `h`.
pub fn curl_check(field: &FieldModel, r: &Vec3, h: f64) -> Result<Vec3> {
    if !(h > 0.0) {
        return Err(Error::invalid(format!("finite-difference step must be > 0, got {h}")));
    }
    // jac[i][k] = ∂A_k/∂x_i
    let mut jac = [[0.0; 3]; 3];
    for (i, row) in jac.iter_mut().enumerate() {
        let mut step = Vec3::zeros();
        step[i] = h;
        let plus = field.potential(&(r + step))?;
        let minus = field.potential(&(r - step))?;
        let d = (plus - minus) / (2.0 * h);
        *row = [d.x, d.y, d.z];
    }
    Ok(Vec3::new(
        jac[1][2] - jac[2][1],
        jac[2][0] - jac[0][2],
        jac[0][1] - jac[1][0],
    ))
}
