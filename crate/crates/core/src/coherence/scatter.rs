use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterBound {
    pub photons_per_pulse: f64,
    pub photons_per_s: f64,
}

/// Upper bound on scattered repump photons absorbed by a neighbour ion at
/// distance `spacing_m`: N = 6π(λ/2π)² · 1/(4πd²) per cooling pulse.
///
/// The bound assumes every cooling pulse emits one photon at `wavelength_m`
/// and a perfect polarisation match with the absorbing ion.
pub fn scatter_absorption(wavelength_m: f64, spacing_m: f64, pulses_per_s: f64) -> Result<ScatterBound> {
    if !(wavelength_m.is_finite() && wavelength_m > 0.0) {
        return Err(Error::param("wavelength_m", "must be finite and > 0"));
    }
    if !(spacing_m.is_finite() && spacing_m > 0.0) {
        return Err(Error::param("spacing_m", "must be finite and > 0"));
    }
    if !(pulses_per_s.is_finite() && pulses_per_s >= 0.0) {
        return Err(Error::param("pulses_per_s", "must be finite and >= 0"));
    }
    let cross_section = 6.0 * PI * (wavelength_m / (2.0 * PI)).powi(2);
    let n = cross_section / (4.0 * PI * spacing_m * spacing_m);
    Ok(ScatterBound { photons_per_pulse: n, photons_per_s: n * pulses_per_s })
}
