use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid internal state: {0}")]
    InvalidState(String),

    #[error("unmodeled transition {from} -> {to}: {reason}")]
    UnmodeledTransition { from: String, to: String, reason: String },

    #[error("transition {from} -> {to} is forbidden for a {drive} drive")]
    ForbiddenTransition { from: String, to: String, drive: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("equilibrium solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("structural instability: radial mode {mode} has squared frequency {omega_sq:.4e} (zig-zag transition)")]
    ZigZagInstability { mode: usize, omega_sq: f64 },

    #[error("ion {ion} participates in mode {mode} with |b| = {participation:.4} below floor {floor}; usable coolants: {alternatives:?}")]
    WeakParticipation {
        ion: usize,
        mode: usize,
        participation: f64,
        floor: f64,
        alternatives: Vec<usize>,
    },

    #[error("Fock truncation leakage {leakage:.3e} exceeds tolerance {tolerance:.1e} at n_max = {n_max}; increase n_max")]
    Leakage { leakage: f64, tolerance: f64, n_max: usize },

    #[error("ion {ion} has population in the bracket state; repump before driving")]
    BracketPopulated { ion: usize },

    #[error("schedule burst ({burst_s:.6} s) is longer than the period ({period_s:.6} s)")]
    BurstExceedsPeriod { burst_s: f64, period_s: f64 },

    #[error("ratio estimator diverges: p_rsb = {p_rsb} >= p_bsb = {p_bsb} (state too hot)")]
    RatioDivergence { p_rsb: f64, p_bsb: f64 },

    #[error("Allan deviation: {0}")]
    Allan(String),

    #[error("fit failed: {0}")]
    Fit(String),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name: name.into(), reason: reason.into() }
    }
}
