//! Population-level evolution of the chain under the protocol's pulses.
//!
//! The cycle-level dynamics are incoherent (every repump destroys coherence),
//! so populations suffice. Each pulse is decomposed into a set of two-level
//! lines (carrier plus tracked-mode sidebands on every S↔D pair of the
//! coolant, carriers only on the other ions), and every line
//! exchanges population with the generalized Rabi probability
//! Ω²/(Ω²+Δ²)·sin²(√(Ω²+Δ²)t/2). Lines are applied in a fixed order:
//! every sideband line of a pulse first, then the carriers.
//!
//! Two backends evolve the same model:
//!
//! * **rate**: exact probability tables, used as the oracle;
//! * **Monte Carlo**: per-trajectory labels and Fock indices with Bernoulli
//!   outcomes and Gillespie heating, run in parallel with one ChaCha8 stream
//!   per trajectory.
//!
//! Heating acts for the duration of every pulse, not only during idles.

mod bath;
mod heating;
mod pulse;
mod state;

pub use bath::AxialBath;
pub use heating::HeatingModel;
pub use pulse::{
    axial_factor, effective_rsb_rabi, light_shift, rabi_probability, PulseKind, PulseProgram, PulseSpec,
    Sideband, Target,
};
pub use state::{Estimate, RateState, SystemState};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::levels::{repump_branching, transition_offset, InternalState, LevelConfig, N_LEVELS};
use crate::seed::stream_rng;
use crate::{Error, Result};
use heating::{gillespie, Uniformizer};
use state::{binomial, Repr, Trajectory};

/// Default tolerance on the population in the two highest Fock levels.
pub const DEFAULT_LEAKAGE_TOLERANCE: f64 = 1e-3;
const MIN_N_MAX: usize = 15;

const S1_LABELS: [usize; 3] = [1, 2, 3];
const D_LABELS: [usize; 3] = [4, 5, 6];
const BRACKET_LABEL: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub n_ions: usize,
    /// Ion whose coupling to the tracked mode is modelled.
    pub coolant: usize,
    pub levels: LevelConfig,
    /// Index of the tracked mode in its axis listing (informational).
    pub mode_index: usize,
    pub mode_frequency_hz: f64,
    /// Lamb-Dicke factor of the coolant on the tracked mode.
    pub eta: f64,
    pub bath: AxialBath,
    pub n_max: usize,
    pub heating: HeatingModel,
    /// Add one quantum with probability η² per repumped coolant.
    pub recoil: bool,
    pub leakage_tolerance: f64,
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_ions == 0 || self.n_ions > 64 {
            return Err(Error::param("n_ions", "must lie in 1..=64"));
        }
        if self.coolant >= self.n_ions {
            return Err(Error::param("coolant", format!("ion {} out of range", self.coolant)));
        }
        self.levels.validate()?;
        if !(self.mode_frequency_hz.is_finite() && self.mode_frequency_hz > 0.0) {
            return Err(Error::param("mode_frequency_hz", "must be finite and > 0"));
        }
        if !(self.eta.is_finite() && self.eta.abs() < 1.0) {
            return Err(Error::param("eta", "must lie in (-1, 1)"));
        }
        if self.n_max < 2 {
            return Err(Error::param("n_max", "must be >= 2"));
        }
        self.heating.validate()?;
        if !(self.leakage_tolerance > 0.0 && self.leakage_tolerance < 1.0) {
            return Err(Error::param("leakage_tolerance", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Smallest truncation keeping a thermal state of mean `peak_nbar` a factor
/// ten below `tolerance` in its top two levels.
pub fn suggest_n_max(peak_nbar: f64, tolerance: f64) -> usize {
    if peak_nbar <= 0.0 {
        return MIN_N_MAX;
    }
    let q = peak_nbar / (peak_nbar + 1.0);
    let n = ((tolerance / 10.0).ln() / q.ln()).ceil() as usize + 1;
    n.max(MIN_N_MAX)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[serde(deny_unknown_fields)]
pub enum Backend {
    Rate,
    MonteCarlo { trajectories: usize, seed: u64 },
}

/// Initial distribution of the tracked mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FockInit {
    Thermal(f64),
    Fock(u32),
    Distribution(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Step {
    Pulse(PulseSpec),
    /// Record a [`Snapshot`].
    Sample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time_s: f64,
    pub nbar: Estimate,
    /// Per-ion probability of not being in |0⟩.
    pub bright: Vec<Estimate>,
}

#[derive(Debug, Clone)]
enum LineProb {
    Const(f64),
    /// Indexed by `bin * (n_max + 1) + n` with `n` the Fock index on the `a` side.
    Table(Vec<f64>),
}

#[derive(Debug, Clone)]
struct Line {
    ion: usize,
    a: usize,
    b: usize,
    dn: i64,
    prob: LineProb,
}

impl Line {
    #[inline]
    fn p(&self, bin: usize, n: usize, stride: usize) -> f64 {
        match &self.prob {
            LineProb::Const(p) => *p,
            LineProb::Table(t) => t[bin * stride + n],
        }
    }
}

#[derive(Debug)]
enum Action {
    Drive { lines: Vec<Line>, targets: Vec<usize> },
    Repump,
    Idle,
}

struct Compiled {
    action: Action,
    duration_s: f64,
    heat: Option<Uniformizer>,
}

enum Op {
    Run(usize),
    Sample,
}

#[derive(Debug, Clone)]
pub struct Engine {
    cfg: EngineConfig,
}

impl Engine {
    pub fn new(cfg: EngineConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    /// Build a state with the given per-ion internal labels and tracked-mode distribution.
    pub fn prepare(&self, backend: Backend, internal: &[InternalState], fock: &FockInit) -> Result<SystemState> {
        let cfg = &self.cfg;
        if internal.len() != cfg.n_ions {
            return Err(Error::param("internal", format!("expected {} labels", cfg.n_ions)));
        }
        let dist = self.fock_distribution(fock)?;
        let leak: f64 = dist.iter().rev().take(2).sum();
        if leak > cfg.leakage_tolerance {
            return Err(Error::Leakage { leakage: leak, tolerance: cfg.leakage_tolerance, n_max: cfg.n_max });
        }
        let n_bins = cfg.bath.n_bins();
        let repr = match backend {
            Backend::Rate => {
                let mut r = state::RateState {
                    n_max: cfg.n_max,
                    n_bins,
                    coolant: cfg.coolant,
                    joint: vec![0.0; n_bins * N_LEVELS * (cfg.n_max + 1)],
                    data: vec![[0.0; N_LEVELS]; cfg.n_ions],
                };
                let w = cfg.bath.weight();
                let label = internal[cfg.coolant].index();
                for bin in 0..n_bins {
                    for (n, p) in dist.iter().enumerate() {
                        let i = r.idx(bin, label, n);
                        r.joint[i] = w * p;
                    }
                }
                for (ion, s) in internal.iter().enumerate() {
                    if ion != cfg.coolant {
                        r.data[ion][s.index()] = 1.0;
                    }
                }
                Repr::Rate(r)
            }
            Backend::MonteCarlo { trajectories, seed } => {
                if trajectories == 0 {
                    return Err(Error::param("trajectories", "must be >= 1"));
                }
                let mut cdf = dist.clone();
                for i in 1..cdf.len() {
                    cdf[i] += cdf[i - 1];
                }
                let labels: Vec<u8> = internal.iter().map(|s| s.index() as u8).collect();
                let ts = (0..trajectories)
                    .map(|i| {
                        let mut rng = stream_rng(seed, i as u64);
                        let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
                        let n = cdf.partition_point(|c| *c <= u).min(cfg.n_max) as u32;
                        let bin = if n_bins > 1 { rng.random_range(0..n_bins) as u16 } else { 0 };
                        Trajectory { labels: labels.clone(), n, bin, rng }
                    })
                    .collect();
                Repr::MonteCarlo(ts)
            }
        };
        Ok(SystemState { time_s: 0.0, n_ions: cfg.n_ions, n_max: cfg.n_max, repr })
    }

    fn fock_distribution(&self, fock: &FockInit) -> Result<Vec<f64>> {
        let len = self.cfg.n_max + 1;
        match fock {
            FockInit::Thermal(nbar) => {
                if !(nbar.is_finite() && *nbar >= 0.0) {
                    return Err(Error::param("nbar", "must be finite and >= 0"));
                }
                let q = nbar / (nbar + 1.0);
                let mut d: Vec<f64> = (0..len).map(|n| q.powi(n as i32)).collect();
                let s: f64 = d.iter().sum();
                d.iter_mut().for_each(|x| *x /= s);
                Ok(d)
            }
            FockInit::Fock(n) => {
                if *n as usize >= len {
                    return Err(Error::param("n", format!("Fock index {n} exceeds n_max {}", self.cfg.n_max)));
                }
                let mut d = vec![0.0; len];
                d[*n as usize] = 1.0;
                Ok(d)
            }
            FockInit::Distribution(p) => {
                if p.len() > len || p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(Error::param("distribution", "must be non-negative with at most n_max + 1 entries"));
                }
                let s: f64 = p.iter().sum();
                if (s - 1.0).abs() > 1e-9 {
                    return Err(Error::param("distribution", format!("sums to {s}, not 1")));
                }
                let mut d = p.clone();
                d.resize(len, 0.0);
                Ok(d)
            }
        }
    }

    fn compile(&self, pulse: &PulseSpec) -> Result<Compiled> {
        let cfg = &self.cfg;
        pulse.validate(cfg.n_ions)?;
        if let Some(sb) = pulse.sideband {
            if sb.mode != cfg.mode_index {
                return Err(Error::param(
                    "sideband.mode",
                    format!("mode {} is not the tracked mode {}", sb.mode, cfg.mode_index),
                ));
            }
        }
        let targets: Vec<usize> = (0..cfg.n_ions).filter(|&i| pulse.target.includes(i)).collect();
        let t = pulse.duration_s;
        let action = match pulse.kind {
            PulseKind::Idle => Action::Idle,
            PulseKind::Repump => Action::Repump,
            PulseKind::MwPi | PulseKind::MwPiHalf | PulseKind::RamanTwoTone => {
                let (a, b) = pulse.transition;
                let p = rabi_probability(pulse.rabi_hz, pulse.detuning_hz, t);
                let lines = targets
                    .iter()
                    .map(|&ion| Line { ion, a: a.index(), b: b.index(), dn: 0, prob: LineProb::Const(p) })
                    .collect();
                Action::Drive { lines, targets: targets.clone() }
            }
            PulseKind::RsbShelve => Action::Drive { lines: self.quadrupole_lines(pulse, &targets)?, targets: targets.clone() },
        };
        let heat = (cfg.heating.rate_qps > 0.0 && t > 0.0).then(|| Uniformizer::new(cfg.heating.rate_qps, cfg.n_max, t));
        Ok(Compiled { action, duration_s: t, heat })
    }

    fn quadrupole_lines(&self, pulse: &PulseSpec, targets: &[usize]) -> Result<Vec<Line>> {
        let cfg = &self.cfg;
        let (x, y) = pulse.transition;
        let (s0, d0) = if x.is_d() { (y, x) } else { (x, y) };
        let laser = transition_offset(s0, d0, &cfg.levels)? + pulse.detuning_hz;
        let (omega, t, nu) = (pulse.rabi_hz, pulse.duration_s, cfg.mode_frequency_hz);
        let stride = cfg.n_max + 1;
        let factors = cfg.bath.factors();
        let mut lines = Vec::new();
        let mut carriers = Vec::new();
        for &ion in targets {
            for &s in &S1_LABELS {
                for &d in &D_LABELS {
                    let (ss, dd) = (InternalState::from_index(s), InternalState::from_index(d));
                    let delta = laser - transition_offset(ss, dd, &cfg.levels)?;
                    carriers.push(Line { ion, a: s, b: d, dn: 0, prob: LineProb::Const(rabi_probability(omega, delta, t)) });
                    if ion != cfg.coolant || cfg.eta == 0.0 {
                        continue;
                    }
                    let mut red = vec![0.0; factors.len() * stride];
                    let mut blue = vec![0.0; factors.len() * stride];
                    for (bin, f) in factors.iter().enumerate() {
                        let base = omega * cfg.eta * f;
                        for n in 0..stride {
                            if n >= 1 {
                                red[bin * stride + n] = rabi_probability(base * (n as f64).sqrt(), delta + nu, t);
                            }
                            if n < cfg.n_max {
                                blue[bin * stride + n] = rabi_probability(base * ((n + 1) as f64).sqrt(), delta - nu, t);
                            }
                        }
                    }
                    lines.push(Line { ion, a: s, b: d, dn: -1, prob: LineProb::Table(red) });
                    lines.push(Line { ion, a: s, b: d, dn: 1, prob: LineProb::Table(blue) });
                }
            }
        }
        // Carriers last: an off-resonant carrier transfer must not feed a
        // resonant sideband within the same pulse.
        lines.extend(carriers);
        Ok(lines)
    }

    /// Apply one pulse of any kind (including its heating).
    pub fn apply(&self, state: &mut SystemState, pulse: &PulseSpec) -> Result<()> {
        self.run(state, &[Step::Pulse(pulse.clone())]).map(|_| ())
    }

    /// Coherent drive: MW, Raman or quadrupole pulse.
    pub fn apply_drive(&self, state: &mut SystemState, pulse: &PulseSpec) -> Result<()> {
        if matches!(pulse.kind, PulseKind::Repump | PulseKind::Idle) {
            return Err(Error::param("kind", "apply_drive needs a coherent pulse"));
        }
        self.apply(state, pulse)
    }

    pub fn apply_repump(&self, state: &mut SystemState, pulse: &PulseSpec) -> Result<()> {
        if pulse.kind != PulseKind::Repump {
            return Err(Error::param("kind", "apply_repump needs a repump pulse"));
        }
        self.apply(state, pulse)
    }

    /// Free evolution under heating for `dt` seconds.
    pub fn heating_step(&self, state: &mut SystemState, dt: f64) -> Result<()> {
        self.apply(state, &PulseSpec::idle(dt))
    }

    /// Execute a program, returning one snapshot per [`Step::Sample`].
    pub fn run(&self, state: &mut SystemState, steps: &[Step]) -> Result<Vec<Snapshot>> {
        if state.n_ions != self.cfg.n_ions || state.n_max != self.cfg.n_max {
            return Err(Error::param("state", "state was prepared for a different engine configuration"));
        }
        let mut distinct: Vec<&PulseSpec> = Vec::new();
        let mut ops = Vec::with_capacity(steps.len());
        for step in steps {
            match step {
                Step::Sample => ops.push(Op::Sample),
                Step::Pulse(p) => {
                    let k = match distinct.iter().position(|q| *q == p) {
                        Some(k) => k,
                        None => {
                            distinct.push(p);
                            distinct.len() - 1
                        }
                    };
                    ops.push(Op::Run(k));
                }
            }
        }
        let compiled = distinct.iter().map(|p| self.compile(p)).collect::<Result<Vec<_>>>()?;
        let mut times = Vec::new();
        let mut t = state.time_s;
        for op in &ops {
            match op {
                Op::Run(k) => t += compiled[*k].duration_s,
                Op::Sample => times.push(t),
            }
        }
        let snaps = match &mut state.repr {
            Repr::Rate(r) => self.run_rate(r, &ops, &compiled, &times)?,
            Repr::MonteCarlo(ts) => self.run_mc(ts, &ops, &compiled, &times)?,
        };
        state.time_s = t;
        let leak = state.leakage();
        if leak > self.cfg.leakage_tolerance {
            return Err(Error::Leakage { leakage: leak, tolerance: self.cfg.leakage_tolerance, n_max: self.cfg.n_max });
        }
        Ok(snaps)
    }

    fn run_rate(&self, r: &mut RateState, ops: &[Op], compiled: &[Compiled], times: &[f64]) -> Result<Vec<Snapshot>> {
        let mut snaps = Vec::with_capacity(times.len());
        for op in ops {
            match op {
                Op::Sample => {
                    let nbar = r.fock_distribution().iter().enumerate().map(|(n, p)| n as f64 * p).sum();
                    let bright = (0..self.cfg.n_ions)
                        .map(|ion| Estimate::exact((1.0 - r.populations(ion)[0]).clamp(0.0, 1.0)))
                        .collect();
                    snaps.push(Snapshot { time_s: times[snaps.len()], nbar: Estimate::exact(nbar), bright });
                }
                Op::Run(k) => {
                    let c = &compiled[*k];
                    match &c.action {
                        Action::Drive { lines, targets } => self.rate_drive(r, lines, targets)?,
                        Action::Repump => self.rate_repump(r)?,
                        Action::Idle => {}
                    }
                    if let Some(u) = &c.heat {
                        for bin in 0..r.n_bins {
                            for label in 0..N_LEVELS {
                                u.apply(r.slice_mut(bin, label));
                            }
                        }
                    }
                    let leak: f64 = r.fock_distribution().iter().rev().take(2).sum();
                    if leak > self.cfg.leakage_tolerance {
                        return Err(Error::Leakage { leakage: leak, tolerance: self.cfg.leakage_tolerance, n_max: self.cfg.n_max });
                    }
                }
            }
        }
        Ok(snaps)
    }

    fn rate_drive(&self, r: &mut RateState, lines: &[Line], targets: &[usize]) -> Result<()> {
        for &ion in targets {
            if r.populations(ion)[BRACKET_LABEL] > 0.0 {
                return Err(Error::BracketPopulated { ion });
            }
        }
        let stride = r.n_max + 1;
        for line in lines {
            if line.ion != r.coolant {
                let v = &mut r.data[line.ion];
                let (x, y) = (v[line.a], v[line.b]);
                let p = line.p(0, 0, stride);
                v[line.a] = (1.0 - p) * x + p * y;
                v[line.b] = p * x + (1.0 - p) * y;
                continue;
            }
            for bin in 0..r.n_bins {
                for n in 0..stride {
                    let m = n as i64 + line.dn;
                    if m < 0 || m as usize >= stride {
                        continue;
                    }
                    let i = r.idx(bin, line.a, n);
                    let j = r.idx(bin, line.b, m as usize);
                    let (x, y) = (r.joint[i], r.joint[j]);
                    if x == 0.0 && y == 0.0 {
                        continue;
                    }
                    let p = line.p(bin, n, stride);
                    r.joint[i] = (1.0 - p) * x + p * y;
                    r.joint[j] = p * x + (1.0 - p) * y;
                }
            }
        }
        Ok(())
    }

    fn rate_repump(&self, r: &mut RateState) -> Result<()> {
        let branch = repump_branching(InternalState::D_ZERO, &self.cfg.levels)?;
        let stride = r.n_max + 1;
        let recoil = if self.cfg.recoil { self.cfg.eta * self.cfg.eta } else { 0.0 };
        for ion in 0..r.data.len() {
            if ion == r.coolant {
                continue;
            }
            let v = &mut r.data[ion];
            let moved: f64 = D_LABELS.iter().map(|&d| v[d]).sum::<f64>() + v[BRACKET_LABEL];
            for &d in &D_LABELS {
                v[d] = 0.0;
            }
            v[BRACKET_LABEL] = 0.0;
            for (s, w) in &branch {
                v[s.index()] += moved * w;
            }
        }
        // Coolant: repump, recoil, then re-thermalise the spectator bins.
        let mut moved = vec![0.0; stride];
        let mut fresh = vec![0.0; N_LEVELS * stride];
        for bin in 0..r.n_bins {
            moved.iter_mut().for_each(|x| *x = 0.0);
            for label in D_LABELS.iter().copied().chain([BRACKET_LABEL]) {
                let sl = r.slice_mut(bin, label);
                for (m, x) in moved.iter_mut().zip(sl.iter_mut()) {
                    *m += *x;
                    *x = 0.0;
                }
            }
            for (s, w) in &branch {
                let sl = r.slice_mut(bin, s.index());
                for n in 0..stride {
                    let up = if n < stride - 1 { recoil } else { 0.0 };
                    sl[n] += moved[n] * w * (1.0 - up);
                    if n + 1 < stride {
                        sl[n + 1] += moved[n] * w * up;
                    }
                }
            }
        }
        fresh.iter_mut().for_each(|x| *x = 0.0);
        for bin in 0..r.n_bins {
            for label in 0..N_LEVELS {
                let i = r.idx(bin, label, 0);
                for n in 0..stride {
                    fresh[label * stride + n] += r.joint[i + n];
                }
            }
        }
        let w = 1.0 / r.n_bins as f64;
        for bin in 0..r.n_bins {
            for label in 0..N_LEVELS {
                let i = r.idx(bin, label, 0);
                for n in 0..stride {
                    r.joint[i + n] = w * fresh[label * stride + n];
                }
            }
        }
        Ok(())
    }

    fn run_mc(&self, ts: &mut [Trajectory], ops: &[Op], compiled: &[Compiled], times: &[f64]) -> Result<Vec<Snapshot>> {
        let n_ions = self.cfg.n_ions;
        let records: Vec<Result<Vec<(u32, u64)>>> = ts
            .par_iter_mut()
            .map(|t| {
                let mut rec = Vec::with_capacity(times.len());
                for op in ops {
                    match op {
                        Op::Sample => {
                            let dark = t.labels.iter().enumerate().fold(0u64, |m, (i, l)| m | (u64::from(*l == 0) << i));
                            rec.push((t.n, dark));
                        }
                        Op::Run(k) => self.mc_step(t, &compiled[*k])?,
                    }
                }
                Ok(rec)
            })
            .collect();
        let records = records.into_iter().collect::<Result<Vec<_>>>()?;
        let count = ts.len();
        let snaps = times
            .iter()
            .enumerate()
            .map(|(k, &time_s)| {
                let (mut s, mut s2) = (0.0, 0.0);
                let mut dark = vec![0usize; n_ions];
                for rec in &records {
                    let (n, mask) = rec[k];
                    let n = f64::from(n);
                    s += n;
                    s2 += n * n;
                    for (ion, d) in dark.iter_mut().enumerate() {
                        *d += ((mask >> ion) & 1) as usize;
                    }
                }
                let bright = dark.iter().map(|&d| binomial(1.0 - d as f64 / count as f64, count)).collect();
                Snapshot { time_s, nbar: Estimate::from_samples(s, s2, count), bright }
            })
            .collect();
        Ok(snaps)
    }

    fn mc_step(&self, t: &mut Trajectory, c: &Compiled) -> Result<()> {
        let cfg = &self.cfg;
        let stride = cfg.n_max + 1;
        match &c.action {
            Action::Drive { lines, targets } => {
                for &ion in targets {
                    if t.labels[ion] as usize == BRACKET_LABEL {
                        return Err(Error::BracketPopulated { ion });
                    }
                }
                for line in lines {
                    let label = t.labels[line.ion] as usize;
                    if line.ion == cfg.coolant {
                        let n = t.n as i64;
                        let (a_side, to_label, to_n) = if label == line.a {
                            (n, line.b, n + line.dn)
                        } else if label == line.b {
                            (n - line.dn, line.a, n - line.dn)
                        } else {
                            continue;
                        };
                        if to_n < 0 || to_n > cfg.n_max as i64 {
                            continue;
                        }
                        let p = line.p(t.bin as usize, a_side as usize, stride);
                        if p > 0.0 && t.rng.random::<f64>() < p {
                            t.labels[line.ion] = to_label as u8;
                            t.n = to_n as u32;
                        }
                    } else if label == line.a || label == line.b {
                        let p = line.p(0, 0, stride);
                        if p > 0.0 && t.rng.random::<f64>() < p {
                            t.labels[line.ion] = if label == line.a { line.b } else { line.a } as u8;
                        }
                    }
                }
            }
            Action::Repump => {
                let branch = repump_branching(InternalState::D_ZERO, &cfg.levels)?;
                for ion in 0..t.labels.len() {
                    let l = t.labels[ion] as usize;
                    if !(D_LABELS.contains(&l) || l == BRACKET_LABEL) {
                        continue;
                    }
                    let u: f64 = t.rng.random();
                    let mut acc = 0.0;
                    let mut dest = branch[2].0;
                    for (s, w) in &branch {
                        acc += w;
                        if u < acc {
                            dest = *s;
                            break;
                        }
                    }
                    t.labels[ion] = dest.index() as u8;
                    if ion == cfg.coolant && cfg.recoil && (t.n as usize) < cfg.n_max && t.rng.random::<f64>() < cfg.eta * cfg.eta {
                        t.n += 1;
                    }
                }
                if cfg.bath.n_bins() > 1 {
                    t.bin = t.rng.random_range(0..cfg.bath.n_bins()) as u16;
                }
            }
            Action::Idle => {}
        }
        if c.heat.is_some() {
            gillespie(&mut t.n, cfg.heating.rate_qps, cfg.n_max as u32, c.duration_s, &mut t.rng);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
