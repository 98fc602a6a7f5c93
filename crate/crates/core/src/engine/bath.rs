use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use super::pulse::axial_factor;
use crate::seed::stream_rng;
use crate::{Error, Result};

/// Number of draws used to tabulate the spectator factor distribution.
const TABULATION_DRAWS: usize = 1 << 15;
/// The tabulation uses a fixed stream so a bath is a pure function of its inputs.
const TABULATION_SEED: u64 = 0xA41A_1BA7;

/// Thermal axial spectator modes of the coolant ion, reduced to the
/// distribution of the sideband Rabi-frequency factor they produce.
///
/// Each bin carries an equal share of the thermal probability and the mean
/// magnitude of the factor ∏ₖ(1 − η_k²(n_k + ½)) over the draws falling in
/// it (only |factor| enters a transfer probability). Both backends
/// draw from the same bins, so Monte-Carlo and rate evolution are exact
/// counterparts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxialBath {
    pub eta_ax: Vec<f64>,
    pub nbar_ax: Vec<f64>,
    factors: Vec<f64>,
    mean_factor: f64,
}

impl AxialBath {
    /// No axial coupling: a single bin with factor 1.
    pub fn none() -> Self {
        Self { eta_ax: Vec::new(), nbar_ax: Vec::new(), factors: vec![1.0], mean_factor: 1.0 }
    }

    pub fn thermal(eta_ax: &[f64], nbar_ax: &[f64], n_bins: usize) -> Result<Self> {
        if eta_ax.len() != nbar_ax.len() {
            return Err(Error::param("nbar_ax", "one mean occupation per axial mode is required"));
        }
        if n_bins == 0 || n_bins > TABULATION_DRAWS {
            return Err(Error::param("axial_bins", format!("must lie in 1..={TABULATION_DRAWS}")));
        }
        if nbar_ax.iter().any(|n| !(n.is_finite() && *n >= 0.0)) {
            return Err(Error::param("nbar_ax", "must be finite and >= 0"));
        }
        if eta_ax.iter().any(|e| !e.is_finite()) {
            return Err(Error::param("eta_ax", "must be finite"));
        }
        let mean_factor = axial_factor(eta_ax, nbar_ax);
        if eta_ax.iter().all(|e| *e == 0.0) || n_bins == 1 {
            return Ok(Self {
                eta_ax: eta_ax.to_vec(),
                nbar_ax: nbar_ax.to_vec(),
                factors: vec![mean_factor],
                mean_factor,
            });
        }
        let geos = nbar_ax
            .iter()
            .map(|&n| Geometric::new(1.0 / (n + 1.0)).map_err(|e| Error::param("nbar_ax", e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let mut rng = stream_rng(TABULATION_SEED, 0);
        let mut draws: Vec<f64> = (0..TABULATION_DRAWS)
            .map(|_| {
                let n: Vec<f64> = geos.iter().map(|g| g.sample(&mut rng) as f64).collect();
                axial_factor(eta_ax, &n).abs()
            })
            .collect();
        draws.sort_by(|a, b| a.partial_cmp(b).expect("finite factors"));
        let factors = (0..n_bins)
            .map(|b| {
                let lo = b * TABULATION_DRAWS / n_bins;
                let hi = (b + 1) * TABULATION_DRAWS / n_bins;
                draws[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            })
            .collect();
        Ok(Self { eta_ax: eta_ax.to_vec(), nbar_ax: nbar_ax.to_vec(), factors, mean_factor })
    }

    pub fn n_bins(&self) -> usize {
        self.factors.len()
    }

    /// Factor of each equally weighted bin.
    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    /// Thermal mean ∏ₖ(1 − η_k²(n̄_k + ½)), used for π-time calibration.
    pub fn mean_factor(&self) -> f64 {
        self.mean_factor
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.factors.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_reproduce_thermal_mean() {
        let bath = AxialBath::thermal(&[0.04, 0.03, 0.02], &[30.0, 17.0, 12.0], 40).unwrap();
        let mean: f64 = bath.factors().iter().sum::<f64>() * bath.weight();
        assert!((mean - bath.mean_factor()).abs() < 2e-3, "{mean} vs {}", bath.mean_factor());
        assert!(bath.factors().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn uncoupled_bath_is_trivial() {
        let bath = AxialBath::thermal(&[0.0, 0.0], &[10.0, 5.0], 16).unwrap();
        assert_eq!(bath.factors(), &[1.0]);
        assert_eq!(AxialBath::none().mean_factor(), 1.0);
    }
}
