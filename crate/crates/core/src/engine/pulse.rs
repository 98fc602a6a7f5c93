use serde::{Deserialize, Serialize};

use crate::consts::TWO_PI;
use crate::levels::{allowed, Coupling, InternalState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PulseKind {
    MwPi,
    MwPiHalf,
    RamanTwoTone,
    /// 435 nm quadrupole drive. Used for the red-sideband shelves of the
    /// cooling cycle and, with other detunings, for carrier and sideband probes.
    RsbShelve,
    Repump,
    Idle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    All,
    Ion(usize),
}

impl Target {
    pub fn includes(self, ion: usize) -> bool {
        match self {
            Target::All => true,
            Target::Ion(i) => i == ion,
        }
    }
}

/// Motional sideband addressed by a quadrupole pulse; `order` 0 is the
/// carrier, −1 the first red sideband, +1 the first blue sideband.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sideband {
    pub mode: usize,
    pub order: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub kind: PulseKind,
    pub target: Target,
    pub transition: (InternalState, InternalState),
    pub sideband: Option<Sideband>,
    /// Carrier Rabi frequency Ω/2π, Hz.
    pub rabi_hz: f64,
    /// Laser detuning from the addressed carrier, Hz.
    pub detuning_hz: f64,
    pub duration_s: f64,
}

impl PulseSpec {
    /// Resonant microwave π-pulse on the qubit of every ion.
    pub fn mw_pi(duration_s: f64) -> Self {
        Self {
            kind: PulseKind::MwPi,
            target: Target::All,
            transition: (InternalState::ZERO, InternalState::ONE),
            sideband: None,
            rabi_hz: 1.0 / (2.0 * duration_s),
            detuning_hz: 0.0,
            duration_s,
        }
    }

    pub fn mw_pi_half(duration_s: f64) -> Self {
        Self {
            kind: PulseKind::MwPiHalf,
            rabi_hz: 1.0 / (4.0 * duration_s),
            ..Self::mw_pi(duration_s)
        }
    }

    /// Resonant two-tone Raman π-transfer on one ion.
    pub fn raman(ion: usize, from: InternalState, to: InternalState, duration_s: f64) -> Self {
        Self {
            kind: PulseKind::RamanTwoTone,
            target: Target::Ion(ion),
            transition: (from, to),
            sideband: None,
            rabi_hz: 1.0 / (2.0 * duration_s),
            detuning_hz: 0.0,
            duration_s,
        }
    }

    /// Quadrupole pulse on `ion` with the given detuning from the `from → to` carrier.
    pub fn quadrupole(
        ion: usize,
        from: InternalState,
        to: InternalState,
        rabi_hz: f64,
        detuning_hz: f64,
        duration_s: f64,
    ) -> Self {
        Self {
            kind: PulseKind::RsbShelve,
            target: Target::Ion(ion),
            transition: (from, to),
            sideband: None,
            rabi_hz,
            detuning_hz,
            duration_s,
        }
    }

    /// Shelving pulse on the first red sideband of a mode at `mode_freq_hz`.
    pub fn rsb_shelve(
        ion: usize,
        from: InternalState,
        to: InternalState,
        mode: usize,
        mode_freq_hz: f64,
        rabi_hz: f64,
        duration_s: f64,
    ) -> Self {
        Self {
            sideband: Some(Sideband { mode, order: -1 }),
            ..Self::quadrupole(ion, from, to, rabi_hz, -mode_freq_hz, duration_s)
        }
    }

    pub fn repump(duration_s: f64) -> Self {
        Self {
            kind: PulseKind::Repump,
            target: Target::All,
            transition: (InternalState::D_ZERO, InternalState::BRACKET),
            sideband: None,
            rabi_hz: 0.0,
            detuning_hz: 0.0,
            duration_s,
        }
    }

    pub fn idle(duration_s: f64) -> Self {
        Self { kind: PulseKind::Idle, ..Self::repump(duration_s) }
    }

    pub fn validate(&self, n_ions: usize) -> Result<()> {
        if !(self.duration_s.is_finite() && self.duration_s >= 0.0) {
            return Err(Error::param("duration_s", "must be finite and >= 0"));
        }
        if !self.rabi_hz.is_finite() || self.rabi_hz < 0.0 {
            return Err(Error::param("rabi_hz", "must be finite and >= 0"));
        }
        if !self.detuning_hz.is_finite() {
            return Err(Error::param("detuning_hz", "must be finite"));
        }
        if let Target::Ion(i) = self.target {
            if i >= n_ions {
                return Err(Error::param("target", format!("ion {i} out of range for {n_ions} ions")));
            }
        }
        let (a, b) = self.transition;
        let forbidden = |drive: &str| Error::ForbiddenTransition {
            from: a.to_string(),
            to: b.to_string(),
            drive: drive.into(),
        };
        match self.kind {
            PulseKind::MwPi | PulseKind::MwPiHalf => {
                if !allowed(Coupling::Microwave, a, b) {
                    return Err(forbidden("microwave"));
                }
            }
            PulseKind::RamanTwoTone => {
                if !allowed(Coupling::Raman, a, b) {
                    return Err(forbidden("Raman"));
                }
                if self.target == Target::All {
                    return Err(Error::param("target", "Raman transfers address a single ion"));
                }
            }
            PulseKind::RsbShelve => {
                if !(allowed(Coupling::Quadrupole, a, b) && (a.is_s1() || b.is_s1())) {
                    return Err(forbidden("435 nm quadrupole"));
                }
            }
            PulseKind::Repump | PulseKind::Idle => {}
        }
        Ok(())
    }
}

/// Ordered list of pulses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PulseProgram {
    pub pulses: Vec<PulseSpec>,
}

impl PulseProgram {
    pub fn new(pulses: Vec<PulseSpec>) -> Self {
        Self { pulses }
    }

    pub fn duration_s(&self) -> f64 {
        self.pulses.iter().map(|p| p.duration_s).sum()
    }

    pub fn kinds(&self) -> Vec<PulseKind> {
        self.pulses.iter().map(|p| p.kind).collect()
    }
}

/// Transfer probability of a two-level drive with Rabi frequency `rabi_hz`
/// and detuning `detuning_hz` after `t` seconds.
pub fn rabi_probability(rabi_hz: f64, detuning_hz: f64, t: f64) -> f64 {
    if rabi_hz == 0.0 || t == 0.0 {
        return 0.0;
    }
    let w2 = rabi_hz * rabi_hz + detuning_hz * detuning_hz;
    let s = (0.5 * TWO_PI * w2.sqrt() * t).sin();
    rabi_hz * rabi_hz / w2 * s * s
}

/// Debye–Waller factor ∏ₖ (1 − η_ax,k² (n_ax,k + ½)) of a set of spectator axial modes.
pub fn axial_factor(eta_ax: &[f64], n_ax: &[f64]) -> f64 {
    eta_ax.iter().zip(n_ax).map(|(e, n)| 1.0 - e * e * (n + 0.5)).product()
}

/// First-red-sideband Rabi frequency with the second-order axial correction.
pub fn effective_rsb_rabi(rabi_hz: f64, eta_rad: f64, eta_ax: &[f64], n: u32, n_ax: &[f64]) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", "the red sideband of n = 0 has no final state"));
    }
    if eta_ax.len() != n_ax.len() {
        return Err(Error::param("n_ax", "one occupation per axial mode is required"));
    }
    Ok(rabi_hz * eta_rad * f64::from(n).sqrt() * axial_factor(eta_ax, n_ax))
}

/// Second-order light shift Σ Ω²/(4Δ) of a set of off-resonant drives.
/// Inputs and result share one unit (Hz or rad/s).
pub fn light_shift(driving: &[(f64, f64)]) -> Result<f64> {
    driving
        .iter()
        .map(|&(omega, delta)| {
            if delta == 0.0 || !delta.is_finite() {
                Err(Error::param("detuning", "light shift needs a nonzero, finite detuning"))
            } else {
                Ok(omega * omega / (4.0 * delta))
            }
        })
        .sum()
}
