//! Shelving-based detection, spectroscopy scans and sideband-ratio thermometry.
//!
//! Detection: every ion is re-initialised to |0⟩ (motion untouched), a MW π
//! moves it to |1⟩, the 435 nm probe shelves part of it into D, and a second
//! MW π returns the unshelved part to |0⟩. Anything not in |0⟩ reads bright.
//! The classifier is perfect.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{rabi_probability, Engine, Estimate, PulseKind, PulseSpec, Step, SystemState};
use crate::levels::InternalState;
use crate::modes::ChainModes;
use crate::{Error, Result};

/// Default number of shots per spectroscopy point for rate-mode error bars.
pub const DEFAULT_SHOTS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub frequency_offset_hz: f64,
    /// Bright probability per ion.
    pub shelve_probability: Vec<f64>,
    /// Binomial standard error per ion for `shots` shots.
    pub stderr: Vec<f64>,
    pub shots: usize,
}

fn check_probe(probe: &PulseSpec) -> Result<()> {
    let (a, b) = probe.transition;
    let s_to_d = (a.is_s1() && b.is_d()) || (a.is_d() && b.is_s1());
    if probe.kind != PulseKind::RsbShelve || !s_to_d {
        return Err(Error::param("probe", "detection probes must drive an S(F=1) -> D transition"));
    }
    Ok(())
}

/// Per-ion bright probability after MW π → probe → MW π. The input state is not modified.
pub fn simulate_shelving_detection(
    engine: &Engine,
    state: &SystemState,
    probe: &PulseSpec,
    mw_pi_s: f64,
) -> Result<Vec<Estimate>> {
    check_probe(probe)?;
    let mut s = state.clone();
    s.reset_internal(&vec![InternalState::ZERO; s.n_ions()]);
    let mw = PulseSpec::mw_pi(mw_pi_s);
    let snaps = engine.run(
        &mut s,
        &[Step::Pulse(mw.clone()), Step::Pulse(probe.clone()), Step::Pulse(mw), Step::Sample],
    )?;
    Ok(snaps.into_iter().next().expect("one sample").bright)
}

fn to_result(offset: f64, est: Vec<Estimate>, state: &SystemState, shots: usize) -> ProbeResult {
    let shots = state.trajectories().unwrap_or(shots);
    let p: Vec<f64> = est.iter().map(|e| e.value).collect();
    let stderr = p.iter().map(|p| (p * (1.0 - p) / shots as f64).max(0.0).sqrt()).collect();
    ProbeResult { frequency_offset_hz: offset, shelve_probability: p, stderr, shots }
}

/// One detection per offset, with the probe's detuning shifted by the offset.
/// In Monte-Carlo mode `shots` is the trajectory count; in rate mode it only sets error bars.
pub fn scan_spectrum(
    engine: &Engine,
    state: &SystemState,
    offsets_hz: &[f64],
    template: &PulseSpec,
    mw_pi_s: f64,
    shots: usize,
) -> Result<Vec<ProbeResult>> {
    check_probe(template)?;
    if offsets_hz.iter().any(|o| !o.is_finite()) {
        return Err(Error::param("offsets_hz", "must be finite"));
    }
    offsets_hz
        .par_iter()
        .map(|&off| {
            let probe = PulseSpec { detuning_hz: template.detuning_hz + off, ..template.clone() };
            let est = simulate_shelving_detection(engine, state, &probe, mw_pi_s)?;
            Ok(to_result(off, est, state, shots))
        })
        .collect()
}

/// Analytic first-order spectrum of one ion of a chain probed on the
/// |1⟩ → (D,1,0) line: the carrier plus a red and a blue sideband for every
/// axial and radial mode, each thermally averaged. Overlapping lines add
/// (clamped at 1).
pub fn chain_spectrum(
    modes: &ChainModes,
    ion: usize,
    nbar_axial: &[f64],
    nbar_radial: &[f64],
    rabi_hz: f64,
    duration_s: f64,
    offsets_hz: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let n = modes.positions.len();
    if ion >= n {
        return Err(Error::param("ion", format!("ion {ion} out of range")));
    }
    if nbar_axial.len() != n || nbar_radial.len() != n {
        return Err(Error::param("nbar", "one mean occupation per mode and axis is required"));
    }
    // (frequency, η, n̄) per sideband-bearing mode.
    let lines: Vec<(f64, f64, f64)> = [(&modes.axial, nbar_axial), (&modes.radial, nbar_radial)]
        .iter()
        .flat_map(|(m, nb)| (0..n).map(move |k| (m.frequencies_hz[k], m.lamb_dicke[ion][k], nb[k])))
        .collect();
    Ok(offsets_hz
        .iter()
        .map(|&d| {
            let mut p = rabi_probability(rabi_hz, d, duration_s);
            for &(nu, eta, nbar) in &lines {
                let q = nbar / (nbar + 1.0);
                let mut w = 1.0 / (nbar + 1.0);
                for k in 0..400u32 {
                    let kf = f64::from(k);
                    if k > 0 {
                        p += w * rabi_probability(rabi_hz * eta.abs() * kf.sqrt(), d + nu, duration_s);
                    }
                    p += w * rabi_probability(rabi_hz * eta.abs() * (kf + 1.0).sqrt(), d - nu, duration_s);
                    w *= q;
                    if w < 1e-12 {
                        break;
                    }
                }
            }
            (d, p.min(1.0))
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NbarEstimate {
    pub nbar: f64,
    pub stderr: f64,
}

/// Sideband-ratio estimate n̄ = r/(1 − r), r = p_rsb/p_bsb, with first-order
/// propagation of binomial errors for `shots` shots per probe.
pub fn ratio_nbar(p_rsb: f64, p_bsb: f64, shots: usize) -> Result<NbarEstimate> {
    for (name, p) in [("p_rsb", p_rsb), ("p_bsb", p_bsb)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param(name, "must be a probability"));
        }
    }
    if p_rsb >= p_bsb {
        return Err(Error::RatioDivergence { p_rsb, p_bsb });
    }
    let r = p_rsb / p_bsb;
    let nbar = r / (1.0 - r);
    let stderr = if shots == 0 {
        0.0
    } else {
        let s = shots as f64;
        let var_a = p_rsb * (1.0 - p_rsb) / s;
        let var_b = p_bsb * (1.0 - p_bsb) / s;
        let var_r = var_a / (p_bsb * p_bsb) + var_b * p_rsb * p_rsb / p_bsb.powi(4);
        var_r.sqrt() / (1.0 - r).powi(2)
    };
    Ok(NbarEstimate { nbar, stderr })
}

/// Equal-duration red and blue sideband probes of the tracked mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SidebandProbe {
    pub rabi_hz: f64,
    pub duration_s: f64,
    pub mw_pi_s: f64,
    pub shots: usize,
}

impl SidebandProbe {
    /// Weak probe of `duration_s` whose length is `fraction` of the n = 1
    /// sideband π-time for Lamb-Dicke factor `eta` and axial factor `axial_factor`.
    pub fn weak(eta: f64, axial_factor: f64, fraction: f64, duration_s: f64) -> Self {
        Self {
            rabi_hz: fraction / (2.0 * duration_s * eta.abs() * axial_factor),
            duration_s,
            mw_pi_s: 20e-6,
            shots: DEFAULT_SHOTS,
        }
    }
}

/// Red and blue sideband bright probabilities of `ion` on the engine's tracked mode.
pub fn sideband_probabilities(engine: &Engine, state: &SystemState, ion: usize, probe: &SidebandProbe) -> Result<(Estimate, Estimate)> {
    let nu = engine.config().mode_frequency_hz;
    let make = |det: f64| PulseSpec::quadrupole(ion, InternalState::ONE, InternalState::D_ZERO, probe.rabi_hz, det, probe.duration_s);
    let red = simulate_shelving_detection(engine, state, &make(-nu), probe.mw_pi_s)?;
    let blue = simulate_shelving_detection(engine, state, &make(nu), probe.mw_pi_s)?;
    Ok((red[ion], blue[ion]))
}

/// Sideband-ratio thermometry of the engine's tracked mode through the coolant.
pub fn probe_nbar(engine: &Engine, state: &SystemState, probe: &SidebandProbe) -> Result<NbarEstimate> {
    let ion = engine.config().coolant;
    let (red, blue) = sideband_probabilities(engine, state, ion, probe)?;
    let shots = state.trajectories().unwrap_or(probe.shots);
    ratio_nbar(red.value, blue.value, shots)
}

/// Probe duration for a π-pulse on the first blue sideband at the thermal-mean
/// Rabi frequency of a mode with mean occupation `nbar`.
pub fn thermal_pi_time(rabi_hz: f64, eta: f64, axial_factor: f64, nbar: f64) -> f64 {
    let q = nbar / (nbar + 1.0);
    let mut w = 1.0 / (nbar + 1.0);
    let mut mean_sqrt = 0.0;
    for k in 0..10_000u32 {
        mean_sqrt += w * f64::from(k + 1).sqrt();
        w *= q;
        if w < 1e-14 {
            break;
        }
    }
    1.0 / (2.0 * rabi_hz * eta.abs() * axial_factor * mean_sqrt)
}

#[cfg(test)]
mod tests;
