//! Physical constants (CODATA 2018) and species data.

use std::f64::consts::PI;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Atomic mass constant, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;

/// Electron mass, kg.
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;

/// Mass of a singly ionised ¹⁷¹Yb atom, kg.
pub const YB171_ION_MASS: f64 = 170.936_323 * AMU - ELECTRON_MASS;

/// Natural linewidth of the 370 nm cooling transition, Hz (Γ/2π).
pub const YB_370_LINEWIDTH_HZ: f64 = 19.6e6;

/// Default shelving laser wavelength, m.
pub const SHELVING_WAVELENGTH_M: f64 = 435e-9;

pub(crate) const TWO_PI: f64 = 2.0 * PI;
