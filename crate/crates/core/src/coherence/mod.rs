//! Data-qubit decoherence caused by the cooling light.
//!
//! The 435 nm light shelving the coolant also light-shifts the data qubits by
//! S = Σ Ω²/(4Δ). A spin echo removes any static part of S, but intensity
//! fluctuations ε(t) that differ between the two echo arms leave a phase
//! error 2πS·(∫₁ε − ∫₂ε) over the beam-on time, and averaging cos Δφ over
//! Gaussian ε gives a Gaussian decay. This module provides the Allan
//! deviation used to characterise ε, the analytic coherence-time predictor,
//! a Monte-Carlo spin-echo simulator, decay-rate sweeps, and the bound on
//! absorption of scattered 297 nm photons.

mod allan;
mod budget;
mod echo;
mod noise;
mod scatter;

pub use allan::{allan_deviation, AllanCurve, AllanMethod, AllanOptions, AllanPoint, NoiseTrace};
pub use budget::{predict_coherence_time, CoherenceTime, ShiftBudget, ShiftTerm};
pub use echo::{
    decay_rate_sweep, fit_gaussian_decay, simulate_spin_echo, DecaySweep, EchoConfig, EchoPoint, EchoResult,
    EchoSchedule, FitOutcome, SweepVariable,
};
pub use noise::{AllanAnchor, CalibratedNoise, NoiseProcess};
pub use scatter::{scatter_absorption, ScatterBound};
