//! Compilation of the cooling sequence and the cooling/heating schedules
//! built from it.
//!
//! One "cooling pulse" is one full four-step cycle: RSB shelve from (S,1,+1)
//! to (D,1,−1), RSB shelve from (S,1,−1) to (D,1,+1), a two-tone Raman
//! transfer |1⟩ → (S,1,+1) on the coolant, and the repump.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consts::{BOLTZMANN, PLANCK, YB_370_LINEWIDTH_HZ};
use crate::engine::{
    suggest_n_max, AxialBath, Backend, Engine, EngineConfig, Estimate, FockInit, HeatingModel, PulseKind,
    PulseProgram, PulseSpec, Step, SystemState, DEFAULT_LEAKAGE_TOLERANCE,
};
use crate::levels::{InternalState, LevelConfig};
use crate::modes::{ChainModes, ModeStructure, TrapConfig};
use crate::seed::derive_seed;
use crate::stats::mean_stderr;
use crate::{Error, Result};

/// Minimum |b| of the coolant in the target mode.
pub const DEFAULT_PARTICIPATION_FLOOR: f64 = 0.15;
/// Periods per steady-state window.
pub const STEADY_WINDOW: usize = 5;
/// Relative change between consecutive windows below which n̄ is steady.
pub const STEADY_THRESHOLD: f64 = 0.05;
const MAX_AUTO_N_MAX: usize = 512;

/// Pulse durations of one cycle plus the microwave π-time used in preparation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CycleCalibration {
    pub shelve_plus_s: f64,
    pub shelve_minus_s: f64,
    pub raman_s: f64,
    pub repump_s: f64,
    pub mw_pi_s: f64,
}

impl Default for CycleCalibration {
    fn default() -> Self {
        Self { shelve_plus_s: 75e-6, shelve_minus_s: 135e-6, raman_s: 65e-6, repump_s: 20e-6, mw_pi_s: 20e-6 }
    }
}

impl CycleCalibration {
    /// Longer shelving pulses (85/155 µs) giving the 325 µs tilt-mode cycle.
    pub fn tilt() -> Self {
        Self { shelve_plus_s: 85e-6, shelve_minus_s: 155e-6, ..Self::default() }
    }

    pub fn cycle_time_s(&self) -> f64 {
        self.shelve_plus_s + self.shelve_minus_s + self.raman_s + self.repump_s
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("shelve_plus_s", self.shelve_plus_s),
            ("shelve_minus_s", self.shelve_minus_s),
            ("raman_s", self.raman_s),
            ("repump_s", self.repump_s),
            ("mw_pi_s", self.mw_pi_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoolingCycle {
    pub mode: usize,
    pub coolant: usize,
    pub shelve_plus: PulseSpec,
    pub shelve_minus: PulseSpec,
    pub raman: PulseSpec,
    pub repump: PulseSpec,
}

impl CoolingCycle {
    pub fn pulses(&self) -> [&PulseSpec; 4] {
        [&self.shelve_plus, &self.shelve_minus, &self.raman, &self.repump]
    }

    pub fn duration_s(&self) -> f64 {
        self.pulses().iter().map(|p| p.duration_s).sum()
    }

    pub fn program(&self, n_cycles: usize) -> PulseProgram {
        PulseProgram::new((0..n_cycles).flat_map(|_| self.pulses().map(Clone::clone)).collect())
    }
}

/// Preparation: MW π on all ions, Raman |1⟩ → (S,1,+1) on the coolant, MW π on all ions.
/// Leaves the coolant in (S,1,+1) and the data ions back in |0⟩.
pub fn compile_prep(n_ions: usize, coolant: usize, calib: &CycleCalibration) -> Result<PulseProgram> {
    if coolant >= n_ions {
        return Err(Error::param("coolant", format!("ion {coolant} out of range for {n_ions} ions")));
    }
    calib.validate()?;
    Ok(PulseProgram::new(vec![
        PulseSpec::mw_pi(calib.mw_pi_s),
        PulseSpec::raman(coolant, InternalState::ONE, InternalState::S_PLUS, calib.raman_s),
        PulseSpec::mw_pi(calib.mw_pi_s),
    ]))
}

/// Ions whose |participation| in `mode` exceeds `floor`.
pub fn usable_coolants(radial: &ModeStructure, mode: usize, floor: f64) -> Vec<usize> {
    (0..radial.participation.len())
        .filter(|&i| radial.participation[i][mode].abs() > floor)
        .collect()
}

/// The four-pulse cycle cooling `mode` through `coolant`.
///
/// Each shelve's Rabi frequency is chosen so that its duration is the π-time
/// of the n = 1 red sideband with the thermal-mean axial factor
/// `axial_mean_factor`; higher Fock states under-rotate.
pub fn compile_cycle(
    radial: &ModeStructure,
    mode: usize,
    coolant: usize,
    calib: &CycleCalibration,
    axial_mean_factor: f64,
    participation_floor: f64,
) -> Result<CoolingCycle> {
    calib.validate()?;
    let n = radial.n_modes();
    if mode >= n {
        return Err(Error::param("mode", format!("mode {mode} out of range for {n} modes")));
    }
    if coolant >= n {
        return Err(Error::param("coolant", format!("ion {coolant} out of range for {n} ions")));
    }
    let b = radial.participation[coolant][mode];
    if b.abs() <= participation_floor {
        return Err(Error::WeakParticipation {
            ion: coolant,
            mode,
            participation: b.abs(),
            floor: participation_floor,
            alternatives: usable_coolants(radial, mode, participation_floor),
        });
    }
    if !(axial_mean_factor.is_finite() && axial_mean_factor > 0.0) {
        return Err(Error::param("axial_mean_factor", "must be finite and > 0"));
    }
    let eta = radial.lamb_dicke[coolant][mode].abs();
    let nu = radial.frequencies_hz[mode];
    let rabi = |t: f64| 1.0 / (2.0 * t * eta * axial_mean_factor);
    Ok(CoolingCycle {
        mode,
        coolant,
        shelve_plus: PulseSpec::rsb_shelve(
            coolant,
            InternalState::S_PLUS,
            InternalState::D_MINUS,
            mode,
            nu,
            rabi(calib.shelve_plus_s),
            calib.shelve_plus_s,
        ),
        shelve_minus: PulseSpec::rsb_shelve(
            coolant,
            InternalState::S_MINUS,
            InternalState::D_PLUS,
            mode,
            nu,
            rabi(calib.shelve_minus_s),
            calib.shelve_minus_s,
        ),
        raman: PulseSpec::raman(coolant, InternalState::ONE, InternalState::S_PLUS, calib.raman_s),
        repump: PulseSpec::repump(calib.repump_s),
    })
}

/// Mean occupation of the axial spectator modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[serde(deny_unknown_fields)]
pub enum AxialNbar {
    /// Doppler limit Γ/(2ν) of the 370 nm transition for each mode.
    Doppler,
    /// Bose-Einstein occupation of every mode at a common chain temperature.
    Temperature { kelvin: f64 },
    Values(Vec<f64>),
}

/// Mean thermal occupation of a mode of frequency `freq_hz` at `kelvin`.
pub fn bose_nbar(freq_hz: f64, kelvin: f64) -> f64 {
    1.0 / (PLANCK * freq_hz / (BOLTZMANN * kelvin)).exp_m1()
}

/// Everything needed to cool one radial mode through one coolant ion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoolingSetup {
    pub trap: TrapConfig,
    pub levels: LevelConfig,
    pub mode: usize,
    pub coolant: usize,
    pub calib: CycleCalibration,
    pub axial_nbar: AxialNbar,
    pub axial_bins: usize,
    pub participation_floor: f64,
    pub recoil: bool,
}

impl CoolingSetup {
    pub fn new(trap: TrapConfig, mode: usize, coolant: usize) -> Self {
        Self {
            trap,
            levels: LevelConfig::default(),
            mode,
            coolant,
            calib: CycleCalibration::default(),
            axial_nbar: AxialNbar::Doppler,
            axial_bins: 32,
            participation_floor: DEFAULT_PARTICIPATION_FLOOR,
            recoil: false,
        }
    }

    pub fn modes(&self) -> Result<ChainModes> {
        ChainModes::compute(&self.trap)
    }

    pub fn axial_nbar_values(&self, modes: &ChainModes) -> Result<Vec<f64>> {
        match &self.axial_nbar {
            AxialNbar::Doppler => Ok(modes.axial.frequencies_hz.iter().map(|f| YB_370_LINEWIDTH_HZ / (2.0 * f)).collect()),
            AxialNbar::Temperature { kelvin } => {
                if !(kelvin.is_finite() && *kelvin > 0.0) {
                    return Err(Error::param("axial_nbar.kelvin", "must be finite and > 0"));
                }
                Ok(modes.axial.frequencies_hz.iter().map(|&f| bose_nbar(f, *kelvin)).collect())
            }
            AxialNbar::Values(v) if v.len() == modes.axial.n_modes() => Ok(v.clone()),
            AxialNbar::Values(v) => Err(Error::param(
                "axial_nbar",
                format!("{} values given for {} axial modes", v.len(), modes.axial.n_modes()),
            )),
        }
    }

    pub fn bath(&self, modes: &ChainModes) -> Result<AxialBath> {
        let eta_ax = modes.axial.lamb_dicke[self.coolant].clone();
        AxialBath::thermal(&eta_ax, &self.axial_nbar_values(modes)?, self.axial_bins)
    }

    pub fn cycle(&self) -> Result<CoolingCycle> {
        let modes = self.modes()?;
        self.cycle_with(&modes, &self.bath(&modes)?)
    }

    fn cycle_with(&self, modes: &ChainModes, bath: &AxialBath) -> Result<CoolingCycle> {
        if self.coolant >= self.trap.n_ions {
            return Err(Error::param("coolant", format!("ion {} out of range", self.coolant)));
        }
        compile_cycle(&modes.radial, self.mode, self.coolant, &self.calib, bath.mean_factor(), self.participation_floor)
    }

    pub fn prep(&self) -> Result<PulseProgram> {
        compile_prep(self.trap.n_ions, self.coolant, &self.calib)
    }

    /// Engine and cycle for this setup. `n_max = None` picks a truncation
    /// adequate for a thermal state of mean `peak_nbar`.
    pub fn build(&self, heating: HeatingModel, n_max: Option<usize>, peak_nbar: f64) -> Result<(Engine, CoolingCycle)> {
        let modes = self.modes()?;
        let bath = self.bath(&modes)?;
        let cycle = self.cycle_with(&modes, &bath)?;
        let engine = Engine::new(EngineConfig {
            n_ions: self.trap.n_ions,
            coolant: self.coolant,
            levels: self.levels.clone(),
            mode_index: self.mode,
            mode_frequency_hz: modes.radial.frequencies_hz[self.mode],
            eta: modes.radial.lamb_dicke[self.coolant][self.mode],
            bath,
            n_max: n_max.unwrap_or_else(|| suggest_n_max(peak_nbar, DEFAULT_LEAKAGE_TOLERANCE)),
            heating,
            recoil: self.recoil,
            leakage_tolerance: DEFAULT_LEAKAGE_TOLERANCE,
        })?;
        Ok((engine, cycle))
    }
}

/// All ions in |0⟩ with the tracked mode in `fock`, then the preparation program.
pub fn prepared_state(engine: &Engine, backend: Backend, fock: &FockInit, prep: &PulseProgram) -> Result<SystemState> {
    let n = engine.config().n_ions;
    let mut state = engine.prepare(backend, &vec![InternalState::ZERO; n], fock)?;
    let steps: Vec<Step> = prep.pulses.iter().cloned().map(Step::Pulse).collect();
    engine.run(&mut state, &steps)?;
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoolingPoint {
    pub cycle: usize,
    pub nbar: Estimate,
}

/// n̄ of the target mode after each of `n_cycles` cycles (entry 0 is the input state).
pub fn run_cooling(engine: &Engine, state: &mut SystemState, cycle: &CoolingCycle, n_cycles: usize) -> Result<Vec<CoolingPoint>> {
    if n_cycles == 0 {
        return Err(Error::param("n_cycles", "must be >= 1"));
    }
    let mut steps = vec![Step::Sample];
    for _ in 0..n_cycles {
        steps.extend(cycle.pulses().map(|p| Step::Pulse(p.clone())));
        steps.push(Step::Sample);
    }
    let snaps = engine.run(state, &steps)?;
    Ok(snaps.into_iter().enumerate().map(|(cycle, s)| CoolingPoint { cycle, nbar: s.nbar }).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoolingSchedule {
    pub pulses_per_burst: usize,
    /// Burst plus idle, s.
    pub period_s: f64,
    pub total_duration_s: f64,
    pub target_mode: usize,
    pub coolant: usize,
}

impl CoolingSchedule {
    pub fn burst_s(&self, cycle: &CoolingCycle) -> f64 {
        self.pulses_per_burst as f64 * cycle.duration_s()
    }

    pub fn n_periods(&self) -> usize {
        (self.total_duration_s / self.period_s).round() as usize
    }

    pub fn validate(&self, cycle: &CoolingCycle) -> Result<()> {
        if !(self.period_s.is_finite() && self.period_s > 0.0) {
            return Err(Error::param("period_s", "must be finite and > 0"));
        }
        if !(self.total_duration_s.is_finite() && self.total_duration_s >= self.period_s) {
            return Err(Error::param("total_duration_s", "must be at least one period"));
        }
        let burst = self.burst_s(cycle);
        if burst > self.period_s {
            return Err(Error::BurstExceedsPeriod { burst_s: burst, period_s: self.period_s });
        }
        Ok(())
    }
}

/// Fraction of each period left idle for gate operations.
pub fn duty_cycle(schedule: &CoolingSchedule, cycle: &CoolingCycle) -> Result<f64> {
    schedule.validate(cycle)?;
    Ok((schedule.period_s - schedule.burst_s(cycle)) / schedule.period_s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SteadyState {
    Reached { time_s: f64, nbar: Estimate },
    NotReached { last: Estimate },
    /// No cooling at all: n̄ grows without bound.
    Unbounded,
}

impl SteadyState {
    pub fn nbar(&self) -> Option<Estimate> {
        match self {
            SteadyState::Reached { nbar, .. } => Some(*nbar),
            SteadyState::NotReached { last } => Some(*last),
            SteadyState::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimePoint {
    pub time_s: f64,
    pub nbar: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuppressionResult {
    pub samples: Vec<TimePoint>,
    pub steady: SteadyState,
}

fn window_mean(points: &[TimePoint]) -> Estimate {
    let n = points.len() as f64;
    Estimate {
        value: points.iter().map(|p| p.nbar.value).sum::<f64>() / n,
        stderr: points.iter().map(|p| p.nbar.stderr.powi(2)).sum::<f64>().sqrt() / n,
    }
}

/// Scan period-end samples for the first pair of consecutive, non-overlapping
/// `window`-sample windows whose means differ by less than `threshold`
/// (relative). The reported time is the end of the later window.
pub fn detect_steady_state(samples: &[TimePoint], window: usize, threshold: f64) -> SteadyState {
    if window == 0 || samples.is_empty() {
        return SteadyState::NotReached { last: samples.last().map_or(Estimate::exact(f64::NAN), |p| p.nbar) };
    }
    for end in (2 * window)..=samples.len() {
        let earlier = window_mean(&samples[end - 2 * window..end - window]);
        let later = window_mean(&samples[end - window..end]);
        let scale = earlier.value.abs().max(later.value.abs());
        let change = if scale == 0.0 { 0.0 } else { (later.value - earlier.value).abs() / scale };
        if change < threshold {
            return SteadyState::Reached { time_s: samples[end - 1].time_s, nbar: later };
        }
    }
    let tail = samples.len().min(window);
    SteadyState::NotReached { last: window_mean(&samples[samples.len() - tail..]) }
}

/// Alternate cooling bursts with idle heating; n̄ is sampled at every period end.
pub fn run_suppression(
    engine: &Engine,
    schedule: &CoolingSchedule,
    cycle: &CoolingCycle,
    state: &mut SystemState,
) -> Result<SuppressionResult> {
    schedule.validate(cycle)?;
    if schedule.target_mode != cycle.mode || schedule.coolant != cycle.coolant {
        return Err(Error::param("schedule", "target mode and coolant must match the compiled cycle"));
    }
    let idle = PulseSpec::idle(schedule.period_s - schedule.burst_s(cycle));
    let mut steps = vec![Step::Sample];
    for _ in 0..schedule.n_periods() {
        for _ in 0..schedule.pulses_per_burst {
            steps.extend(cycle.pulses().map(|p| Step::Pulse(p.clone())));
        }
        steps.push(Step::Pulse(idle.clone()));
        steps.push(Step::Sample);
    }
    let samples: Vec<TimePoint> = engine
        .run(state, &steps)?
        .into_iter()
        .map(|s| TimePoint { time_s: s.time_s, nbar: s.nbar })
        .collect();
    let steady = if schedule.pulses_per_burst == 0 {
        SteadyState::Unbounded
    } else {
        detect_steady_state(&samples[1..], STEADY_WINDOW, STEADY_THRESHOLD)
    };
    Ok(SuppressionResult { samples, steady })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub total_duration_s: f64,
    pub runs: usize,
    pub backend: Backend,
    pub initial_nbar: f64,
    pub n_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub pulses: usize,
    pub duty_cycle: f64,
    /// Mean over runs of the steady-state n̄; `None` when unbounded.
    pub nbar: Option<f64>,
    pub nbar_err: Option<f64>,
    /// Number of runs that met the steady-state criterion.
    pub steady_runs: usize,
}

/// Peak n̄ a suppression run can reach, used to size the Fock truncation.
pub fn suppression_peak_nbar(initial_nbar: f64, heating: HeatingModel, period_s: f64, total_s: f64, pulses: usize) -> f64 {
    if pulses == 0 {
        initial_nbar + heating.rate_qps * total_s
    } else {
        initial_nbar.max(1.0) + 2.0 * heating.rate_qps * period_s
    }
}

/// Prepare `setup`, then run `schedule` against `heating` from a thermal
/// state of mean `initial_nbar`. Returns the result and the truncation used.
///
/// With `n_max = None` the truncation starts from [`suppression_peak_nbar`]
/// and doubles (up to 512) whenever the run leaks out of it.
pub fn simulate_suppression(
    setup: &CoolingSetup,
    schedule: &CoolingSchedule,
    heating: HeatingModel,
    backend: Backend,
    initial_nbar: f64,
    n_max: Option<usize>,
) -> Result<(SuppressionResult, usize)> {
    let peak = suppression_peak_nbar(
        initial_nbar,
        heating,
        schedule.period_s,
        schedule.total_duration_s,
        schedule.pulses_per_burst,
    );
    let mut size = n_max.unwrap_or_else(|| suggest_n_max(peak, DEFAULT_LEAKAGE_TOLERANCE));
    loop {
        let attempt = setup.build(heating, Some(size), 0.0).and_then(|(engine, cycle)| {
            let mut state = prepared_state(&engine, backend, &FockInit::Thermal(initial_nbar), &setup.prep()?)?;
            run_suppression(&engine, schedule, &cycle, &mut state)
        });
        match attempt {
            Err(Error::Leakage { .. }) if n_max.is_none() && size < MAX_AUTO_N_MAX => {
                size = (2 * size).min(MAX_AUTO_N_MAX);
            }
            other => return other.map(|r| (r, size)),
        }
    }
}

/// Steady-state n̄ against pulses per burst, each point the mean of `runs`
/// independent runs with derived seeds (a single run in rate mode).
pub fn sweep_steady_state(
    setup: &CoolingSetup,
    pulse_counts: &[usize],
    period_s: f64,
    heating: HeatingModel,
    opts: &SweepOptions,
) -> Result<Vec<SweepPoint>> {
    if opts.runs == 0 {
        return Err(Error::param("runs", "must be >= 1"));
    }
    let cycle = setup.cycle()?;
    pulse_counts
        .par_iter()
        .enumerate()
        .map(|(k, &pulses)| {
            let schedule = CoolingSchedule {
                pulses_per_burst: pulses,
                period_s,
                total_duration_s: opts.total_duration_s,
                target_mode: setup.mode,
                coolant: setup.coolant,
            };
            let duty = duty_cycle(&schedule, &cycle)?;
            let runs = if opts.backend == Backend::Rate { 1 } else { opts.runs };
            let mut values = Vec::with_capacity(runs);
            let mut steady_runs = 0;
            let mut unbounded = false;
            for r in 0..runs {
                let backend = match opts.backend {
                    Backend::Rate => Backend::Rate,
                    Backend::MonteCarlo { trajectories, seed } => Backend::MonteCarlo {
                        trajectories,
                        seed: derive_seed(seed, (k * opts.runs + r) as u64),
                    },
                };
                let (res, _) = simulate_suppression(setup, &schedule, heating, backend, opts.initial_nbar, opts.n_max)?;
                match res.steady {
                    SteadyState::Reached { nbar, .. } => {
                        steady_runs += 1;
                        values.push(nbar.value);
                    }
                    SteadyState::NotReached { last } => values.push(last.value),
                    SteadyState::Unbounded => unbounded = true,
                }
            }
            let (nbar, nbar_err) = if unbounded {
                (None, None)
            } else {
                let (m, e) = mean_stderr(&values);
                (Some(m), Some(e))
            };
            Ok(SweepPoint { pulses, duty_cycle: duty, nbar, nbar_err, steady_runs })
        })
        .collect()
}

/// Kinds of the compiled prep followed by `n` cycles, for structural checks.
pub fn sequence_kinds(prep: &PulseProgram, cycle: &CoolingCycle, n: usize) -> Vec<PulseKind> {
    prep.kinds().into_iter().chain(cycle.program(n).kinds()).collect()
}

#[cfg(test)]
mod tests;
