use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::levels::{InternalState, N_LEVELS};

/// A value with its one-standard-error uncertainty (zero for exact rate-mode results).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }

    pub(crate) fn from_samples(sum: f64, sum_sq: f64, count: usize) -> Self {
        let n = count as f64;
        let mean = sum / n;
        let var = if count > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        Self { value: mean, stderr: (var / n).sqrt() }
    }
}

/// Probability tables: the coolant's joint (axial bin, internal label, Fock n)
/// distribution and an internal-label distribution per data ion.
#[derive(Debug, Clone, PartialEq)]
pub struct RateState {
    pub(crate) n_max: usize,
    pub(crate) n_bins: usize,
    pub(crate) coolant: usize,
    pub(crate) joint: Vec<f64>,
    pub(crate) data: Vec<[f64; N_LEVELS]>,
}

impl RateState {
    #[inline]
    pub(crate) fn idx(&self, bin: usize, label: usize, n: usize) -> usize {
        (bin * N_LEVELS + label) * (self.n_max + 1) + n
    }

    pub(crate) fn slice_mut(&mut self, bin: usize, label: usize) -> &mut [f64] {
        let start = self.idx(bin, label, 0);
        let len = self.n_max + 1;
        &mut self.joint[start..start + len]
    }

    pub fn fock_distribution(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.n_max + 1];
        for chunk in self.joint.chunks(self.n_max + 1) {
            for (acc, x) in p.iter_mut().zip(chunk) {
                *acc += x;
            }
        }
        p
    }

    pub fn populations(&self, ion: usize) -> [f64; N_LEVELS] {
        if ion != self.coolant {
            return self.data[ion];
        }
        let mut out = [0.0; N_LEVELS];
        for bin in 0..self.n_bins {
            for (label, o) in out.iter_mut().enumerate() {
                let i = self.idx(bin, label, 0);
                *o += self.joint[i..i + self.n_max + 1].iter().sum::<f64>();
            }
        }
        out
    }

    pub fn total(&self) -> f64 {
        self.joint.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Trajectory {
    pub(crate) labels: Vec<u8>,
    pub(crate) n: u32,
    pub(crate) bin: u16,
    pub(crate) rng: ChaCha8Rng,
}

#[derive(Debug, Clone)]
pub(crate) enum Repr {
    Rate(RateState),
    MonteCarlo(Vec<Trajectory>),
}

/// Joint internal ⊗ motional state of the chain, in either backend.
#[derive(Debug, Clone)]
pub struct SystemState {
    pub(crate) time_s: f64,
    pub(crate) n_ions: usize,
    pub(crate) n_max: usize,
    pub(crate) repr: Repr,
}

impl SystemState {
    pub fn time_s(&self) -> f64 {
        self.time_s
    }

    pub fn n_ions(&self) -> usize {
        self.n_ions
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn is_monte_carlo(&self) -> bool {
        matches!(self.repr, Repr::MonteCarlo(_))
    }

    /// Number of trajectories; `None` in rate mode.
    pub fn trajectories(&self) -> Option<usize> {
        match &self.repr {
            Repr::Rate(_) => None,
            Repr::MonteCarlo(t) => Some(t.len()),
        }
    }

    pub fn rate_state(&self) -> Option<&RateState> {
        match &self.repr {
            Repr::Rate(r) => Some(r),
            Repr::MonteCarlo(_) => None,
        }
    }

    /// Distribution of the tracked mode's Fock index.
    pub fn fock_distribution(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Rate(r) => r.fock_distribution(),
            Repr::MonteCarlo(ts) => {
                let mut p = vec![0.0; self.n_max + 1];
                let w = 1.0 / ts.len() as f64;
                for t in ts {
                    p[t.n as usize] += w;
                }
                p
            }
        }
    }

    pub fn nbar(&self) -> Estimate {
        match &self.repr {
            Repr::Rate(r) => Estimate::exact(
                r.fock_distribution().iter().enumerate().map(|(n, p)| n as f64 * p).sum(),
            ),
            Repr::MonteCarlo(ts) => {
                let (s, s2) = ts.iter().fold((0.0, 0.0), |(s, s2), t| {
                    let n = f64::from(t.n);
                    (s + n, s2 + n * n)
                });
                Estimate::from_samples(s, s2, ts.len())
            }
        }
    }

    /// Internal-state populations of one ion.
    pub fn populations(&self, ion: usize) -> [f64; N_LEVELS] {
        match &self.repr {
            Repr::Rate(r) => r.populations(ion),
            Repr::MonteCarlo(ts) => {
                let mut out = [0.0; N_LEVELS];
                let w = 1.0 / ts.len() as f64;
                for t in ts {
                    out[t.labels[ion] as usize] += w;
                }
                out
            }
        }
    }

    pub fn population(&self, ion: usize, state: InternalState) -> Estimate {
        let p = self.populations(ion)[state.index()];
        match &self.repr {
            Repr::Rate(_) => Estimate::exact(p),
            Repr::MonteCarlo(ts) => binomial(p, ts.len()),
        }
    }

    /// Probability that `ion` reads bright, i.e. is anywhere but |0⟩.
    pub fn bright_probability(&self, ion: usize) -> Estimate {
        let p = 1.0 - self.populations(ion)[InternalState::ZERO.index()];
        match &self.repr {
            Repr::Rate(_) => Estimate::exact(p.clamp(0.0, 1.0)),
            Repr::MonteCarlo(ts) => binomial(p.clamp(0.0, 1.0), ts.len()),
        }
    }

    /// Population in the two highest retained Fock levels.
    pub fn leakage(&self) -> f64 {
        let p = self.fock_distribution();
        p.iter().rev().take(2).sum()
    }

    /// Put every ion into `labels`, keeping the motional state.
    pub fn reset_internal(&mut self, labels: &[InternalState]) {
        assert_eq!(labels.len(), self.n_ions, "one label per ion");
        match &mut self.repr {
            Repr::Rate(r) => {
                let coolant = r.coolant;
                let mut marg = vec![0.0; r.n_bins * (r.n_max + 1)];
                for bin in 0..r.n_bins {
                    for label in 0..N_LEVELS {
                        let i = r.idx(bin, label, 0);
                        for n in 0..=r.n_max {
                            marg[bin * (r.n_max + 1) + n] += r.joint[i + n];
                        }
                    }
                }
                r.joint.iter_mut().for_each(|x| *x = 0.0);
                let target = labels[coolant].index();
                for bin in 0..r.n_bins {
                    let i = r.idx(bin, target, 0);
                    r.joint[i..i + r.n_max + 1]
                        .copy_from_slice(&marg[bin * (r.n_max + 1)..(bin + 1) * (r.n_max + 1)]);
                }
                for (ion, d) in r.data.iter_mut().enumerate() {
                    *d = [0.0; N_LEVELS];
                    if ion != coolant {
                        d[labels[ion].index()] = 1.0;
                    }
                }
            }
            Repr::MonteCarlo(ts) => {
                for t in ts.iter_mut() {
                    for (l, s) in t.labels.iter_mut().zip(labels) {
                        *l = s.index() as u8;
                    }
                }
            }
        }
    }
}

pub(crate) fn binomial(p: f64, shots: usize) -> Estimate {
    Estimate { value: p, stderr: (p * (1.0 - p) / shots as f64).max(0.0).sqrt() }
}
