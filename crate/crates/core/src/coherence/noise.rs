use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Target Allan deviation σ at averaging time τ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllanAnchor {
    pub tau_s: f64,
    pub sigma: f64,
}

/// Fractional intensity noise ε as the sum of white noise and a random walk,
/// piecewise constant over `step_s`. Its Allan variance is
/// σ²(τ) = white/τ + walk·τ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibratedNoise {
    /// White-noise coefficient A of A/τ, s.
    pub white: f64,
    /// Random-walk coefficient B of B·τ, 1/s.
    pub walk: f64,
    pub step_s: f64,
}

impl CalibratedNoise {
    /// Allan deviations 0.143 % at 1 s and 0.071 % at 100 ms of the 435 nm beam.
    pub fn default_anchors() -> [AllanAnchor; 2] {
        [AllanAnchor { tau_s: 1.0, sigma: 1.43e-3 }, AllanAnchor { tau_s: 0.1, sigma: 7.1e-4 }]
    }

    /// Least-squares fit of σ² = A/τ + Bτ (A, B ≥ 0) through the anchors,
    /// weighting each anchor by its relative error.
    pub fn from_anchors(anchors: &[AllanAnchor], step_s: f64) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::param("anchors", "at least one Allan anchor is required"));
        }
        if !(step_s.is_finite() && step_s > 0.0) {
            return Err(Error::param("step_s", "must be finite and > 0"));
        }
        for a in anchors {
            if !(a.tau_s.is_finite() && a.tau_s > 0.0 && a.sigma.is_finite() && a.sigma >= 0.0) {
                return Err(Error::param("anchors", "tau_s must be > 0 and sigma >= 0"));
            }
            if a.tau_s < step_s {
                return Err(Error::param("anchors", format!("anchor tau {} s is below the noise step {step_s} s", a.tau_s)));
            }
        }
        // Relative residuals: rows (1/τ, τ)/σ², target 1.
        let rows: Vec<(f64, f64, f64)> = anchors
            .iter()
            .filter(|a| a.sigma > 0.0)
            .map(|a| {
                let v = a.sigma * a.sigma;
                (1.0 / (a.tau_s * v), a.tau_s / v, 1.0)
            })
            .collect();
        if rows.is_empty() {
            return Ok(Self { white: 0.0, walk: 0.0, step_s });
        }
        let solve_one = |col: usize| {
            let (num, den) = rows.iter().fold((0.0, 0.0), |(n, d), r| {
                let x = if col == 0 { r.0 } else { r.1 };
                (n + x * r.2, d + x * x)
            });
            num / den
        };
        let (s00, s01, s11, b0, b1) = rows.iter().fold((0.0, 0.0, 0.0, 0.0, 0.0), |acc, r| {
            (acc.0 + r.0 * r.0, acc.1 + r.0 * r.1, acc.2 + r.1 * r.1, acc.3 + r.0 * r.2, acc.4 + r.1 * r.2)
        });
        let det = s00 * s11 - s01 * s01;
        let (mut a, mut b) = if det.abs() > 1e-12 * s00 * s11 {
            ((b0 * s11 - b1 * s01) / det, (s00 * b1 - s01 * b0) / det)
        } else {
            (-1.0, -1.0)
        };
        if a < 0.0 || b < 0.0 {
            let cost = |a: f64, b: f64| rows.iter().map(|r| (r.0 * a + r.1 * b - r.2).powi(2)).sum::<f64>();
            let (wa, wb) = (solve_one(0).max(0.0), solve_one(1).max(0.0));
            if cost(wa, 0.0) <= cost(0.0, wb) {
                (a, b) = (wa, 0.0);
            } else {
                (a, b) = (0.0, wb);
            }
        }
        Ok(Self { white: a, walk: b, step_s })
    }

    pub fn allan_deviation(&self, tau_s: f64) -> f64 {
        (self.white / tau_s + self.walk * tau_s).sqrt()
    }

    /// `n_steps` values of ε, one per step, starting the random walk at 0.
    pub fn synthesize<R: Rng + ?Sized>(&self, n_steps: usize, rng: &mut R) -> Vec<f64> {
        let white = Normal::new(0.0, (self.white / self.step_s).sqrt()).expect("finite std");
        let walk = Normal::new(0.0, (3.0 * self.walk * self.step_s).sqrt()).expect("finite std");
        let mut r = 0.0;
        (0..n_steps)
            .map(|_| {
                r += walk.sample(rng);
                r + white.sample(rng)
            })
            .collect()
    }
}

/// Model of the fractional intensity error ε seen by the data ions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[serde(deny_unknown_fields)]
pub enum NoiseProcess {
    None,
    /// The same ε in every shot and both echo arms.
    Static { eps: f64 },
    /// One Gaussian ε per shot with deviation `sigma`, applied to the second
    /// echo arm relative to the first.
    ShotToShot { sigma: f64 },
    /// Time-resolved white + random-walk noise.
    Calibrated(CalibratedNoise),
}

impl NoiseProcess {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseProcess::None => Ok(()),
            NoiseProcess::Static { eps } if eps.is_finite() => Ok(()),
            NoiseProcess::ShotToShot { sigma } if sigma.is_finite() && sigma >= 0.0 => Ok(()),
            NoiseProcess::Calibrated(c)
                if c.white >= 0.0 && c.walk >= 0.0 && c.step_s > 0.0 && c.white.is_finite() && c.walk.is_finite() =>
            {
                Ok(())
            }
            _ => Err(Error::param("noise", "noise parameters must be finite and non-negative")),
        }
    }
}
