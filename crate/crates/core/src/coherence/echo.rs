use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::budget::ShiftBudget;
use super::noise::NoiseProcess;
use crate::consts::TWO_PI;
use crate::engine::Estimate;
use crate::protocol::{CoolingCycle, CoolingSchedule};
use crate::seed::{derive_seed, stream_rng};
use crate::stats::{mean_stderr, polyfit, PolyFit};
use crate::{Error, Result};

/// Beam-on pattern inside one echo arm: a burst of `burst_s` at the start of
/// every period. Each arm restarts the pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EchoSchedule {
    pub burst_s: f64,
    pub period_s: f64,
}

impl EchoSchedule {
    pub fn from_schedule(schedule: &CoolingSchedule, cycle: &CoolingCycle) -> Result<Self> {
        schedule.validate(cycle)?;
        Ok(Self { burst_s: schedule.burst_s(cycle), period_s: schedule.period_s })
    }

    /// Beam permanently on.
    pub fn continuous() -> Self {
        Self { burst_s: 1.0, period_s: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period_s.is_finite() && self.period_s > 0.0 && self.burst_s >= 0.0 && self.burst_s <= self.period_s) {
            return Err(Error::param("echo_schedule", "need 0 <= burst_s <= period_s and period_s > 0"));
        }
        Ok(())
    }

    /// Beam-on intervals within an arm of length `len`.
    pub fn intervals(&self, len: f64) -> Vec<(f64, f64)> {
        if self.burst_s == 0.0 {
            return Vec::new();
        }
        if self.burst_s >= self.period_s {
            return vec![(0.0, len)];
        }
        let mut out = Vec::new();
        let mut k = 0.0;
        loop {
            let start = k * self.period_s;
            if start >= len {
                break;
            }
            out.push((start, (start + self.burst_s).min(len)));
            k += 1.0;
        }
        out
    }

    pub fn on_time(&self, len: f64) -> f64 {
        self.intervals(len).iter().map(|(a, b)| b - a).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchoConfig {
    pub schedule: EchoSchedule,
    pub budget: ShiftBudget,
    pub noise: NoiseProcess,
    /// Total echo durations τ (both arms), s.
    pub wait_times_s: Vec<f64>,
    pub shots: usize,
    pub seed: u64,
    /// Optional light-independent Gaussian decay time of the echo contrast, s.
    pub background_t_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoPoint {
    pub wait_s: f64,
    pub fidelity: Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FitOutcome {
    Finite { tau_s: f64, rms_residual: f64 },
    /// Fidelity indistinguishable from 1 at every wait time.
    NoDecay,
    Failed { reason: FitFailure },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitFailure {
    TooFewPoints,
    AtSearchBoundary,
}

impl FitOutcome {
    /// Decay rate 1/T; zero without decay.
    pub fn rate(&self) -> Result<f64> {
        match self {
            FitOutcome::Finite { tau_s, .. } => Ok(1.0 / tau_s),
            FitOutcome::NoDecay => Ok(0.0),
            FitOutcome::Failed { reason } => Err(Error::Fit(format!("{reason:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchoResult {
    pub points: Vec<EchoPoint>,
    pub fit: FitOutcome,
}

const FIT_LN_MIN: f64 = -9.2; // ≈ 0.1 ms
const FIT_LN_MAX: f64 = 9.2; // ≈ 10⁴ s
const FIT_GRID: usize = 400;

/// Least-squares fit of ½(1 + exp(−(τ/T)²)) to (τ, fidelity) pairs.
pub fn fit_gaussian_decay(points: &[(f64, f64)]) -> FitOutcome {
    if points.len() < 2 {
        return FitOutcome::Failed { reason: FitFailure::TooFewPoints };
    }
    if points.iter().all(|(_, f)| *f >= 1.0 - 1e-9) {
        return FitOutcome::NoDecay;
    }
    let cost = |ln_t: f64| {
        let t = ln_t.exp();
        points.iter().map(|(tau, f)| (f - 0.5 * (1.0 + (-(tau / t).powi(2)).exp())).powi(2)).sum::<f64>()
    };
    let step = (FIT_LN_MAX - FIT_LN_MIN) / (FIT_GRID - 1) as f64;
    let best = (0..FIT_GRID)
        .map(|i| (i, cost(FIT_LN_MIN + i as f64 * step)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if best == 0 || best == FIT_GRID - 1 {
        return FitOutcome::Failed { reason: FitFailure::AtSearchBoundary };
    }
    // Golden-section refinement between the neighbours of the best grid point.
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (FIT_LN_MIN + (best - 1) as f64 * step, FIT_LN_MIN + (best + 1) as f64 * step);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..100 {
        if cost(c) < cost(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let ln_t = 0.5 * (a + b);
    FitOutcome::Finite { tau_s: ln_t.exp(), rms_residual: (cost(ln_t) / points.len() as f64).sqrt() }
}

/// ∫ ε over [a, b) for ε piecewise constant on cells of width `h`.
fn integrate_cells(eps: &[f64], h: f64, a: f64, b: f64) -> f64 {
    let mut acc = 0.0;
    let mut t = a;
    while t < b {
        let cell = (t / h).floor() as usize;
        let end = ((cell + 1) as f64 * h).min(b);
        acc += eps[cell.min(eps.len() - 1)] * (end - t);
        if end <= t {
            break;
        }
        t = end;
    }
    acc
}

/// Spin echo π/2 – τ/2 – π – τ/2 – π/2 on a data ion while the cooling
/// schedule runs in both arms.
///
/// Per shot the echo phase is Δφ = 2πS(∫₁(1+ε) − ∫₂(1+ε)) over the beam-on
/// intervals of each arm and the fidelity is ½(1 + C cos Δφ), with C the
/// optional background contrast exp(−(τ/T_bg)²).
pub fn simulate_spin_echo(cfg: &EchoConfig) -> Result<EchoResult> {
    cfg.schedule.validate()?;
    cfg.noise.validate()?;
    let shift = TWO_PI * cfg.budget.total_shift_hz()?;
    if cfg.shots == 0 {
        return Err(Error::param("shots", "must be >= 1"));
    }
    if cfg.wait_times_s.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::param("wait_times_s", "must be finite and > 0"));
    }
    if let Some(t) = cfg.background_t_s {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::param("background_t_s", "must be finite and > 0"));
        }
    }
    let points: Vec<EchoPoint> = cfg
        .wait_times_s
        .iter()
        .enumerate()
        .map(|(k, &tau)| {
            let half = 0.5 * tau;
            let arm = cfg.schedule.intervals(half);
            let on = cfg.schedule.on_time(half);
            let contrast = cfg.background_t_s.map_or(1.0, |t| (-(tau / t).powi(2)).exp());
            let point_seed = derive_seed(cfg.seed, k as u64);
            let fids: Vec<f64> = (0..cfg.shots)
                .into_par_iter()
                .map(|shot| {
                    let mut rng = stream_rng(point_seed, shot as u64);
                    let dphi = match cfg.noise {
                        NoiseProcess::None => 0.0,
                        NoiseProcess::Static { eps } => {
                            let first: f64 = arm.iter().map(|&(a, b)| b - a).sum();
                            let second: f64 = arm.iter().map(|&(a, b)| (half + b) - (half + a)).sum();
                            shift * eps * (first - second)
                        }
                        NoiseProcess::ShotToShot { sigma } => {
                            let eps = if sigma > 0.0 { Normal::new(0.0, sigma).expect("sigma >= 0").sample(&mut rng) } else { 0.0 };
                            -shift * on * eps
                        }
                        NoiseProcess::Calibrated(c) => {
                            let steps = (tau / c.step_s).ceil() as usize + 1;
                            let eps = c.synthesize(steps, &mut rng);
                            let first: f64 = arm.iter().map(|&(a, b)| integrate_cells(&eps, c.step_s, a, b)).sum();
                            let second: f64 =
                                arm.iter().map(|&(a, b)| integrate_cells(&eps, c.step_s, half + a, half + b)).sum();
                            shift * (first - second)
                        }
                    };
                    0.5 * (1.0 + contrast * dphi.cos())
                })
                .collect();
            let (mean, err) = mean_stderr(&fids);
            EchoPoint { wait_s: tau, fidelity: Estimate { value: mean, stderr: err } }
        })
        .collect();
    let fit = fit_gaussian_decay(&points.iter().map(|p| (p.wait_s, p.fidelity.value)).collect::<Vec<_>>());
    Ok(EchoResult { points, fit })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Values are the reference (first-term) Rabi frequency, Hz; all terms scale with it.
    Rabi,
    /// Values are the reference (first-term) detuning, Hz; all terms scale with it.
    Detuning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySweep {
    pub variable: SweepVariable,
    /// (swept value, decay rate 1/s).
    pub points: Vec<(f64, f64)>,
    /// Quadratic in Ω for `Rabi`, linear in 1/Δ for `Detuning`.
    pub fit: PolyFit,
}

/// Echo decay rate against Ω or Δ. With `scale_waits` the wait times of
/// `base` are stretched by the ratio of light shifts so that every point
/// samples its decay over a similar range.
pub fn decay_rate_sweep(variable: SweepVariable, values: &[f64], base: &EchoConfig, scale_waits: bool) -> Result<DecaySweep> {
    if values.len() < 4 {
        return Err(Error::param("values", "a sweep needs at least 4 values"));
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::param("values", "must be finite and > 0"));
    }
    let (rabi_ref, det_ref) = base.budget.reference().ok_or_else(|| Error::param("budget", "empty budget"))?;
    let shift_ref = base.budget.total_shift_hz()?;
    let points = values
        .iter()
        .map(|&v| {
            let budget = match variable {
                SweepVariable::Rabi => base.budget.scaled(v / rabi_ref, 1.0),
                SweepVariable::Detuning => base.budget.scaled(1.0, v / det_ref),
            };
            let stretch = if scale_waits { (shift_ref / budget.total_shift_hz()?).abs() } else { 1.0 };
            let cfg = EchoConfig {
                budget,
                wait_times_s: base.wait_times_s.iter().map(|t| t * stretch).collect(),
                ..base.clone()
            };
            Ok((v, simulate_spin_echo(&cfg)?.fit.rate()?))
        })
        .collect::<Result<Vec<_>>>()?;
    let rates: Vec<f64> = points.iter().map(|p| p.1).collect();
    let fit = match variable {
        SweepVariable::Rabi => polyfit(values, &rates, 2)?,
        SweepVariable::Detuning => polyfit(&values.iter().map(|v| 1.0 / v).collect::<Vec<_>>(), &rates, 1)?,
    };
    Ok(DecaySweep { variable, points, fit })
}
