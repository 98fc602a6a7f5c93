use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest uniformization rate × time handled in one sub-step.
const MAX_LAMBDA_T: f64 = 30.0;
const POISSON_TAIL: f64 = 1e-15;

/// Heating of the tracked mode by an infinite-temperature bath: up-jumps at
/// Γ(n+1), down-jumps at Γn, so dn̄/dt = Γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatingModel {
    pub rate_qps: f64,
}

impl HeatingModel {
    pub fn none() -> Self {
        Self { rate_qps: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate_qps.is_finite() && self.rate_qps >= 0.0) {
            return Err(Error::param("heating_rate_qps", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Exact transition-matrix action of the birth–death generator on Fock
/// distributions, by uniformization.
pub(crate) struct Uniformizer {
    n_max: usize,
    rate: f64,
    lambda: f64,
    /// Poisson weights for one full sub-step, and the sub-step count.
    weights: Vec<f64>,
    steps: usize,
    tail_weights: Vec<f64>,
}

fn poisson_weights(mean: f64) -> Vec<f64> {
    let mut w = vec![(-mean).exp()];
    let mut cum = w[0];
    let mut k = 0usize;
    while 1.0 - cum > POISSON_TAIL && k < 10_000 {
        k += 1;
        let next = w[k - 1] * mean / k as f64;
        w.push(next);
        cum += next;
        if next == 0.0 && k as f64 > mean {
            break;
        }
    }
    w
}

impl Uniformizer {
    pub(crate) fn new(rate: f64, n_max: usize, dt: f64) -> Self {
        let lambda = rate * (2 * n_max + 1) as f64;
        let total = lambda * dt;
        let steps = (total / MAX_LAMBDA_T).floor() as usize;
        let rem = total - steps as f64 * MAX_LAMBDA_T;
        Self {
            n_max,
            rate,
            lambda,
            weights: if steps > 0 { poisson_weights(MAX_LAMBDA_T) } else { Vec::new() },
            steps,
            tail_weights: poisson_weights(rem),
        }
    }

    fn step_matrix(&self, v: &[f64], out: &mut [f64]) {
        let g = self.rate / self.lambda;
        let top = self.n_max;
        for n in 0..=top {
            let up_out = if n < top { (n + 1) as f64 } else { 0.0 };
            let mut x = v[n] * (1.0 - g * (up_out + n as f64));
            if n > 0 {
                x += g * n as f64 * v[n - 1];
            }
            if n < top {
                x += g * (n + 1) as f64 * v[n + 1];
            }
            out[n] = x;
        }
    }

    fn apply_weights(&self, dist: &mut [f64], weights: &[f64], a: &mut [f64], b: &mut [f64]) {
        a.copy_from_slice(dist);
        for (x, v) in dist.iter_mut().zip(a.iter()) {
            *x = weights[0] * v;
        }
        for &w in &weights[1..] {
            self.step_matrix(a, b);
            a.copy_from_slice(b);
            for (x, v) in dist.iter_mut().zip(a.iter()) {
                *x += w * v;
            }
        }
    }

    /// Evolve one Fock distribution in place.
    pub(crate) fn apply(&self, dist: &mut [f64]) {
        if self.rate == 0.0 || dist.iter().all(|x| *x == 0.0) {
            return;
        }
        let mut a = vec![0.0; dist.len()];
        let mut b = vec![0.0; dist.len()];
        for _ in 0..self.steps {
            self.apply_weights(dist, &self.weights, &mut a, &mut b);
        }
        if self.tail_weights.len() > 1 || self.tail_weights[0] != 1.0 {
            self.apply_weights(dist, &self.tail_weights, &mut a, &mut b);
        }
    }
}

/// Gillespie evolution of one Fock index for `dt` seconds, reflecting at `n_max`.
pub(crate) fn gillespie(n: &mut u32, rate: f64, n_max: u32, dt: f64, rng: &mut ChaCha8Rng) {
    if rate == 0.0 || dt <= 0.0 {
        return;
    }
    let mut t = 0.0;
    loop {
        let up = if *n < n_max { rate * (*n + 1) as f64 } else { 0.0 };
        let down = rate * *n as f64;
        let total = up + down;
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / total;
        if t > dt {
            return;
        }
        if rng.random::<f64>() * total < up {
            *n += 1;
        } else {
            *n -= 1;
        }
    }
}
