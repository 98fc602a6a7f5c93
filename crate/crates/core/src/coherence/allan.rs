use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniformly sampled amplitude record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseTrace {
    samples: Vec<(f64, f64)>,
}

impl NoiseTrace {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Allan("a trace needs at least two samples".into()));
        }
        if samples.iter().any(|(t, a)| !(t.is_finite() && a.is_finite())) {
            return Err(Error::Allan("non-finite sample".into()));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Allan("timestamps must be strictly increasing".into()));
        }
        Ok(Self { samples })
    }

    /// Samples `amplitudes` at spacing `dt` starting from t = 0.
    pub fn uniform(dt: f64, amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().enumerate().map(|(i, a)| (i as f64 * dt, *a)).collect())
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn duration_s(&self) -> f64 {
        self.samples[self.samples.len() - 1].0 - self.samples[0].0
    }

    pub fn mean_spacing_s(&self) -> f64 {
        self.duration_s() / (self.samples.len() - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllanMethod {
    /// Consecutive, non-overlapping bins.
    #[default]
    NonOverlapping,
    /// Every sample offset used as a bin start.
    Overlapping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AllanOptions {
    pub method: AllanMethod,
    /// Divide by the mean amplitude of the trace.
    pub normalized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllanPoint {
    /// Realised averaging time (whole number of samples).
    pub tau_s: f64,
    pub sigma: f64,
    /// Bin differences averaged.
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllanCurve {
    pub points: Vec<AllanPoint>,
    pub normalized: bool,
}

/// Two-sample Allan deviation σ(τ) = √(½⟨(ȳₖ₊₁ − ȳₖ)²⟩) of bin means ȳ.
pub fn allan_deviation(trace: &NoiseTrace, taus: &[f64], opts: AllanOptions) -> Result<AllanCurve> {
    let y: Vec<f64> = trace.samples.iter().map(|s| s.1).collect();
    let n = y.len();
    let dt = trace.mean_spacing_s();
    let scale = if opts.normalized {
        let mean = y.iter().sum::<f64>() / n as f64;
        if mean == 0.0 {
            return Err(Error::Allan("cannot normalise a zero-mean trace".into()));
        }
        mean.abs()
    } else {
        1.0
    };
    // Offsetting by the first sample keeps a constant trace exactly constant in the prefix sums.
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + (y[i] - y[0]);
    }
    let bin_mean = |start: usize, m: usize| (prefix[start + m] - prefix[start]) / m as f64;
    let mut sorted = taus.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut points: Vec<AllanPoint> = Vec::with_capacity(taus.len());
    for &tau in &sorted {
        if !(tau.is_finite() && tau >= 2.0 * dt * (1.0 - 1e-9)) {
            return Err(Error::Allan(format!("tau {tau} s is below twice the sample spacing {dt} s")));
        }
        let span = n as f64 * dt;
        if tau > span / 3.0 * (1.0 + 1e-9) {
            return Err(Error::Allan(format!("tau {tau} s exceeds a third of the record ({span} s)")));
        }
        let m = (tau / dt).round().max(1.0) as usize;
        let bins = n / m;
        if bins < 3 {
            return Err(Error::Allan(format!("tau {tau} s leaves fewer than 3 bins")));
        }
        let (sum, pairs) = match opts.method {
            AllanMethod::NonOverlapping => {
                let means: Vec<f64> = (0..bins).map(|k| bin_mean(k * m, m)).collect();
                (means.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>(), bins - 1)
            }
            AllanMethod::Overlapping => {
                let count = n - 2 * m + 1;
                ((0..count).map(|i| (bin_mean(i + m, m) - bin_mean(i, m)).powi(2)).sum::<f64>(), count)
            }
        };
        let sigma = (0.5 * sum / pairs as f64).sqrt() / scale;
        let tau_s = m as f64 * dt;
        if points.last().is_some_and(|p| p.tau_s == tau_s) {
            continue;
        }
        points.push(AllanPoint { tau_s, sigma, pairs });
    }
    Ok(AllanCurve { points, normalized: opts.normalized })
}
