//! Gauge-invariant Dirac phase of a charged particle dragged along a noisy
//! (Brownian) trajectory through a static magnetic field.
//!
//! The crate is organised bottom-up:
//!
//! * [`paths`] samples time grids, Wiener and Ornstein–Uhlenbeck noise,
//!   deterministic drift loops and their sum.
//! * [`fields`] holds the vector-potential models.
//! * [`phase`] evaluates the Itô line integral, the straight-chord closure and
//!   assembles the phase angle.
//! * [`theory`] collects the closed-form moment predictions.
//! * [`montecarlo`] runs ensembles, estimates moments and fits sweeps.
//! * [`cli`] is the config grammar, CSV formats and command drivers.
//! * [`verify`] implements the acceptance checks shared by `dirac-phase verify`
//!   and the `acceptance` test target.

pub mod cli;
pub mod error;
pub mod fields;
pub mod montecarlo;
pub mod paths;
pub mod phase;
pub mod theory;
pub mod verify;

pub use error::{Error, Result};

/// Positions, potentials and field vectors.
pub type Vec3 = nalgebra::Vector3<f64>;
