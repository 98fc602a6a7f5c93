//! Simulation and analysis toolkit for same-isotope sympathetic cooling of
//! ¹⁷¹Yb⁺ ion chains using Zeeman-selective shelving on the 435 nm
//! quadrupole line.
//!
//! The crate is organised bottom-up:
//!
//! * [`levels`]: internal level structure, transition offsets and selection
//!   rules.
//! * [`modes`]: linear-chain equilibrium, normal modes and Lamb-Dicke factors.
//! * [`engine`]: population-level evolution under pulses, repump and motional
//!   heating, with a Monte-Carlo trajectory backend and an exact rate-equation
//!   backend.
//! * [`protocol`]: compiles the cooling sequence and runs cooling/heating
//!   schedules and steady-state sweeps.
//! * [`thermometry`]: shelving-based detection, spectroscopy scans and
//!   sideband-ratio temperature estimates.
//! * [`coherence`]: turns Allan deviations and light-shift budgets into
//!   coherence-time predictions, simulates spin echoes and bounds 297 nm
//!   scatter.
//! * [`scenario`]: documented default parameter sets for the standard 5-ion
//!   experiments.

pub mod coherence;
pub mod consts;
pub mod engine;
mod error;
pub mod levels;
pub mod modes;
pub mod protocol;
pub mod scenario;
pub mod seed;
pub mod stats;
pub mod thermometry;

pub use error::{Error, Result};
