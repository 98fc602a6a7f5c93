//! ¹⁷¹Yb⁺ level structure used by the cooling protocol.
//!
//! Only the states that the protocol touches are modelled: the two hyperfine
//! qubit states, the S₁/₂ F=1 Zeeman sublevels, the D₃/₂ F=1 sublevels and
//! the ³[3/2]₁/₂ F=0 bracket state the 935 nm repump connects to. Frequencies
//! are offsets from a per-family reference carrier so no hyperfine or optical
//! constants are needed.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Manifold {
    S,
    D,
    Bracket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InternalState {
    manifold: Manifold,
    f: u8,
    mf: i8,
}

/// Number of distinct modelled internal states.
pub const N_LEVELS: usize = 8;

impl InternalState {
    /// Qubit |0⟩ = S₁/₂ F=0.
    pub const ZERO: Self = Self { manifold: Manifold::S, f: 0, mf: 0 };
    /// Qubit |1⟩ = S₁/₂ F=1 mF=0.
    pub const ONE: Self = Self { manifold: Manifold::S, f: 1, mf: 0 };
    pub const S_MINUS: Self = Self { manifold: Manifold::S, f: 1, mf: -1 };
    pub const S_PLUS: Self = Self { manifold: Manifold::S, f: 1, mf: 1 };
    pub const D_MINUS: Self = Self { manifold: Manifold::D, f: 1, mf: -1 };
    pub const D_ZERO: Self = Self { manifold: Manifold::D, f: 1, mf: 0 };
    pub const D_PLUS: Self = Self { manifold: Manifold::D, f: 1, mf: 1 };
    pub const BRACKET: Self = Self { manifold: Manifold::Bracket, f: 0, mf: 0 };

    /// All modelled states, in table order (see [`InternalState::index`]).
    pub const ALL: [Self; N_LEVELS] = [
        Self::ZERO,
        Self::S_MINUS,
        Self::ONE,
        Self::S_PLUS,
        Self::D_MINUS,
        Self::D_ZERO,
        Self::D_PLUS,
        Self::BRACKET,
    ];

    pub fn new(manifold: Manifold, f: u8, mf: i8) -> Result<Self> {
        let ok = match (manifold, f) {
            (Manifold::S, 0) | (Manifold::Bracket, 0) => mf == 0,
            (Manifold::S, 1) | (Manifold::D, 1) => (-1..=1).contains(&mf),
            _ => false,
        };
        if ok {
            Ok(Self { manifold, f, mf })
        } else {
            Err(Error::InvalidState(format!("{manifold:?}, F={f}, mF={mf}")))
        }
    }

    pub fn manifold(self) -> Manifold {
        self.manifold
    }

    pub fn f(self) -> u8 {
        self.f
    }

    pub fn mf(self) -> i8 {
        self.mf
    }

    /// Position of the state in [`InternalState::ALL`].
    pub fn index(self) -> usize {
        match (self.manifold, self.f, self.mf) {
            (Manifold::S, 0, _) => 0,
            (Manifold::S, _, m) => (2 + m) as usize,
            (Manifold::D, _, m) => (5 + m) as usize,
            (Manifold::Bracket, _, _) => 7,
        }
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn is_s1(self) -> bool {
        self.manifold == Manifold::S && self.f == 1
    }

    pub fn is_d(self) -> bool {
        self.manifold == Manifold::D
    }

    /// Zeeman energy of the state within its manifold, Hz.
    fn zeeman_hz(self, cfg: &LevelConfig) -> f64 {
        match self.manifold {
            Manifold::S if self.f == 1 => self.mf as f64 * cfg.zeeman_shift_hz,
            Manifold::D => self.mf as f64 * cfg.zeeman_shift_hz * cfg.d_zeeman_ratio,
            _ => 0.0,
        }
    }
}

impl fmt::Display for InternalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::ZERO => write!(f, "|0>"),
            Self::ONE => write!(f, "|1>"),
            Self::BRACKET => write!(f, "|[3/2],0>"),
            s => write!(f, "|{:?},{},{:+}>", s.manifold, s.f, s.mf),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LevelConfig {
    /// Splitting between adjacent mF levels of S₁/₂ F=1, Hz.
    pub zeeman_shift_hz: f64,
    /// D₃/₂ F=1 Zeeman splitting in units of `zeeman_shift_hz`.
    pub d_zeeman_ratio: f64,
    /// Decay probabilities from the bracket state into (S,1,−1), (S,1,0), (S,1,+1).
    pub branching: [f64; 3],
}

impl Default for LevelConfig {
    fn default() -> Self {
        Self {
            zeeman_shift_hz: 11.0e6,
            d_zeeman_ratio: 1.0,
            branching: [1.0 / 3.0; 3],
        }
    }
}

impl LevelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeeman_shift_hz.is_finite() && self.zeeman_shift_hz > 0.0) {
            return Err(Error::param("zeeman_shift_hz", "must be finite and > 0"));
        }
        if !(self.d_zeeman_ratio.is_finite() && self.d_zeeman_ratio > 0.0) {
            return Err(Error::param("d_zeeman_ratio", "must be finite and > 0"));
        }
        let sum: f64 = self.branching.iter().sum();
        if self.branching.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::param("branching", "must be probabilities summing to 1"));
        }
        Ok(())
    }
}

/// Kind of coupling used to drive a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coupling {
    /// Hyperfine microwave, S F=0 ↔ S F=1.
    Microwave,
    /// Co-propagating two-tone Raman within S F=1.
    Raman,
    /// 435 nm electric quadrupole, S ↔ D.
    Quadrupole,
    /// 935 nm repump, D ↔ bracket.
    Repump,
}

/// Carrier frequency offset of `a → b`, Hz.
///
/// S↔D offsets are measured from the |1⟩ → (D,1,0) carrier; S↔S offsets from
/// the zero-field transition of the same family (hyperfine qubit carrier or
/// the degenerate F=1 Zeeman ladder); D↔bracket from the (D,1,0) repump line.
pub fn transition_offset(a: InternalState, b: InternalState, cfg: &LevelConfig) -> Result<f64> {
    use Manifold::*;
    if a == b {
        return Err(unmodeled(a, b, "identical states"));
    }
    match (a.manifold, b.manifold) {
        (S, S) | (S, D) | (D, S) | (D, Bracket) | (Bracket, D) => {
            Ok(b.zeeman_hz(cfg) - a.zeeman_hz(cfg))
        }
        (D, D) => Err(unmodeled(a, b, "no direct drive within the D manifold")),
        (S, Bracket) | (Bracket, S) => Err(unmodeled(a, b, "bracket state is only reached from D")),
        (Bracket, Bracket) => Err(unmodeled(a, b, "identical manifold")),
    }
}

fn unmodeled(a: InternalState, b: InternalState, reason: &str) -> Error {
    Error::UnmodeledTransition { from: a.to_string(), to: b.to_string(), reason: reason.into() }
}

/// Electric-quadrupole selection rule on the mF change.
pub fn quadrupole_selection(delta_mf: i32) -> bool {
    delta_mf.abs() <= 2
}

/// True iff `a` and `b` form an S↔D pair the 435 nm quadrupole drive can connect.
pub fn quadrupole_allowed(a: InternalState, b: InternalState) -> bool {
    let sd = matches!(
        (a.manifold, b.manifold),
        (Manifold::S, Manifold::D) | (Manifold::D, Manifold::S)
    );
    sd && quadrupole_selection(b.mf as i32 - a.mf as i32)
}

/// Whether `coupling` can drive `a ↔ b`.
pub fn allowed(coupling: Coupling, a: InternalState, b: InternalState) -> bool {
    if a == b {
        return false;
    }
    let dm = (b.mf as i32 - a.mf as i32).abs();
    match coupling {
        Coupling::Microwave => {
            a.manifold == Manifold::S && b.manifold == Manifold::S && a.f != b.f && dm <= 1
        }
        Coupling::Raman => a.is_s1() && b.is_s1() && dm <= 2,
        Coupling::Quadrupole => quadrupole_allowed(a, b),
        Coupling::Repump => {
            matches!(
                (a.manifold, b.manifold),
                (Manifold::D, Manifold::Bracket) | (Manifold::Bracket, Manifold::D)
            )
        }
    }
}

/// Spontaneous-decay distribution after repumping a D-manifold state.
///
/// Decay from the bracket state reaches only the S F=1 sublevels; the qubit
/// |0⟩ receives nothing.
pub fn repump_branching(from: InternalState, cfg: &LevelConfig) -> Result<[(InternalState, f64); 3]> {
    if !from.is_d() {
        return Err(Error::InvalidState(format!("repump source {from} is not in the D manifold")));
    }
    Ok([
        (InternalState::S_MINUS, cfg.branching[0]),
        (InternalState::ONE, cfg.branching[1]),
        (InternalState::S_PLUS, cfg.branching[2]),
    ])
}
