use serde::{Deserialize, Serialize};

use crate::consts::TWO_PI;
use crate::engine::light_shift;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftTerm {
    pub label: String,
    pub rabi_hz: f64,
    pub detuning_hz: f64,
}

/// Off-resonant couplings of the cooling light to a data ion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftBudget {
    pub terms: Vec<ShiftTerm>,
}

const NEAR_HZ: f64 = 10e6;
const FAR_HZ: f64 = 30e6;

impl ShiftBudget {
    /// Default budget for the 5-ion experiment.
    ///
    /// Rabi frequencies: carrier 125 kHz, axial COM sideband 100 kHz, other
    /// axial sidebands 50 kHz, radial sidebands 10 kHz. Every coupling appears
    /// once at the near detuning (10 MHz, the qubit-state line) and once at the
    /// far detuning (30 MHz, the other Zeeman line). Carrier and radial
    /// couplings count once per shelving tone, the axial COM once per
    /// sideband (red and blue), and the remaining axial sidebands as one
    /// aggregate row.
    pub fn table_default() -> Self {
        let rows: [(&str, f64, usize); 4] = [
            ("carrier", 125e3, 2),
            ("axial COM sideband", 100e3, 2),
            ("other axial sidebands", 50e3, 1),
            ("radial sidebands", 10e3, 2),
        ];
        let mut terms = Vec::new();
        for (label, rabi, copies) in rows {
            for (dlabel, det) in [("near", NEAR_HZ), ("far", FAR_HZ)] {
                for c in 0..copies {
                    terms.push(ShiftTerm {
                        label: format!("{label} #{} ({dlabel})", c + 1),
                        rabi_hz: rabi,
                        detuning_hz: det,
                    });
                }
            }
        }
        Self { terms }
    }

    pub fn single(rabi_hz: f64, detuning_hz: f64) -> Self {
        Self { terms: vec![ShiftTerm { label: "single".into(), rabi_hz, detuning_hz }] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::param("budget", "at least one term is required"));
        }
        for t in &self.terms {
            if !(t.rabi_hz.is_finite() && t.rabi_hz >= 0.0) {
                return Err(Error::param("budget.rabi_hz", format!("term `{}` has invalid Rabi frequency", t.label)));
            }
            if !t.detuning_hz.is_finite() || t.detuning_hz == 0.0 {
                return Err(Error::param("budget.detuning_hz", format!("term `{}` needs a nonzero detuning", t.label)));
            }
        }
        Ok(())
    }

    /// Total light shift Σ Ω²/(4Δ), Hz.
    pub fn total_shift_hz(&self) -> Result<f64> {
        self.validate()?;
        let pairs: Vec<(f64, f64)> = self.terms.iter().map(|t| (t.rabi_hz, t.detuning_hz)).collect();
        light_shift(&pairs)
    }

    /// Every Rabi frequency multiplied by `rabi`, every detuning by `detuning`.
    pub fn scaled(&self, rabi: f64, detuning: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| ShiftTerm { label: t.label.clone(), rabi_hz: t.rabi_hz * rabi, detuning_hz: t.detuning_hz * detuning })
                .collect(),
        }
    }

    /// Rabi frequency and detuning of the first term, the sweep reference.
    pub fn reference(&self) -> Option<(f64, f64)> {
        self.terms.first().map(|t| (t.rabi_hz, t.detuning_hz))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoherenceTime {
    Finite { seconds: f64 },
    /// No fluctuating shift (σ_ε = 0, zero total shift, or no beam-on time).
    Infinite,
}

impl CoherenceTime {
    pub fn seconds(&self) -> f64 {
        match self {
            CoherenceTime::Finite { seconds } => *seconds,
            CoherenceTime::Infinite => f64::INFINITY,
        }
    }
}

/// 1/e wall-clock coherence time under Gaussian light-shift noise.
///
/// The decay exp(−(σ_ε²/2)(S·τ_on/2)²) with S = 2π·Σ Ω²/(4Δ) reaches 1/e at
/// beam-on time τ_on = 2√2/(S σ_ε); the wall-clock time is τ_on/(1 − duty).
/// `duty = 0` applies no adjustment (beam always on) and `duty = 1` never
/// turns the beam on.
pub fn predict_coherence_time(budget: &ShiftBudget, sigma_eps: f64, duty: f64) -> Result<CoherenceTime> {
    if !(sigma_eps.is_finite() && sigma_eps >= 0.0) {
        return Err(Error::param("sigma_eps", "must be finite and >= 0"));
    }
    if !(0.0..=1.0).contains(&duty) {
        return Err(Error::param("duty", "must lie in [0, 1]"));
    }
    let shift = TWO_PI * budget.total_shift_hz()?.abs();
    if sigma_eps == 0.0 || shift == 0.0 || duty == 1.0 {
        return Ok(CoherenceTime::Infinite);
    }
    let on = 2.0 * 2f64.sqrt() / (shift * sigma_eps);
    Ok(CoherenceTime::Finite { seconds: on / (1.0 - duty) })
}
