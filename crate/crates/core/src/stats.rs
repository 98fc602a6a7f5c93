//! Small statistics helpers: sample moments and least-squares polynomial fits.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Mean and standard error of the mean. The error is 0 for fewer than two samples.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Least-squares polynomial fit, coefficients in ascending power order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
}

impl PolyFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<PolyFit> {
    if xs.len() != ys.len() {
        return Err(Error::Fit("x and y lengths differ".into()));
    }
    if xs.len() <= degree {
        return Err(Error::Fit(format!("need more than {degree} points for a degree-{degree} fit")));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite data".into()));
    }
    // Centre and scale x for conditioning, then map the coefficients back.
    let (mx, _) = mean_stderr(xs);
    let sx = xs.iter().map(|x| (x - mx).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let m = DMatrix::from_fn(xs.len(), degree + 1, |i, j| ((xs[i] - mx) / sx).powi(j as i32));
    let y = DVector::from_column_slice(ys);
    let svd = m.clone().svd(true, true);
    let c = svd.solve(&y, 1e-14).map_err(|e| Error::Fit(e.to_string()))?;
    // Expand Σ c_j ((x − mx)/sx)^j into powers of x.
    let mut coefficients = vec![0.0; degree + 1];
    for (j, cj) in c.iter().enumerate() {
        for (k, out) in coefficients.iter_mut().enumerate().take(j + 1) {
            let binom = binomial(j, k) as f64;
            *out += cj * binom * (-mx).powi((j - k) as i32) / sx.powi(j as i32);
        }
    }
    let fitted = &m * &c;
    let (my, _) = mean_stderr(ys);
    let ss_res: f64 = ys.iter().zip(fitted.iter()).map(|(y, f)| (y - f).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else if ss_res == 0.0 { 1.0 } else { 0.0 };
    Ok(PolyFit { coefficients, r_squared })
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i as u64 + 1))
}
