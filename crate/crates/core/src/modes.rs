//! Equilibrium positions and normal modes of a linear ion chain.
//!
//! Positions are in units of the length scale ℓ = (e²/4πε₀Mω_z²)^{1/3}; the
//! Hessians are in units of Mω_z². All ions share one mass.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::consts::{HBAR, SHELVING_WAVELENGTH_M, TWO_PI, YB171_ION_MASS};
use crate::{Error, Result};

const MAX_NEWTON_ITERS: usize = 200;
const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrapConfig {
    pub n_ions: usize,
    pub axial_com_freq_hz: f64,
    /// COM frequency of the probed (higher-frequency) radial axis.
    pub radial_com_freq_hz: f64,
    pub ion_mass_kg: f64,
    pub laser_wavelength_m: f64,
    /// Projection of the shelving-beam k-vector on the trap axis.
    pub axial_projection: f64,
    /// Projection of the shelving-beam k-vector on the probed radial axis.
    pub radial_projection: f64,
}

impl Default for TrapConfig {
    fn default() -> Self {
        let axial_projection = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            n_ions: 5,
            axial_com_freq_hz: 330e3,
            radial_com_freq_hz: 2.5e6,
            ion_mass_kg: YB171_ION_MASS,
            laser_wavelength_m: SHELVING_WAVELENGTH_M,
            axial_projection,
            radial_projection: axial_projection / 1.4,
        }
    }
}

impl TrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_ions == 0 {
            return Err(Error::param("n_ions", "must be >= 1"));
        }
        for (name, v) in [
            ("axial_com_freq_hz", self.axial_com_freq_hz),
            ("radial_com_freq_hz", self.radial_com_freq_hz),
            ("ion_mass_kg", self.ion_mass_kg),
            ("laser_wavelength_m", self.laser_wavelength_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, "must be finite and > 0"));
            }
        }
        if self.axial_com_freq_hz >= self.radial_com_freq_hz {
            return Err(Error::param(
                "radial_com_freq_hz",
                "must exceed axial_com_freq_hz for a linear chain",
            ));
        }
        for (name, v) in [
            ("axial_projection", self.axial_projection),
            ("radial_projection", self.radial_projection),
        ] {
            if !(v.is_finite() && (0.0..=1.0).contains(&v.abs())) {
                return Err(Error::param(name, "must lie in [-1, 1]"));
            }
        }
        Ok(())
    }

    fn projection(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Axial => self.axial_projection,
            Axis::Radial => self.radial_projection,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Axial,
    Radial,
}

/// Normal modes of one trap axis. Mode index 0 is always the COM mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeStructure {
    pub axis: Axis,
    pub frequencies_hz: Vec<f64>,
    /// Eigenvalues of the dimensionless Hessian, in mode order.
    pub eigenvalues: Vec<f64>,
    /// `participation[ion][mode]`, orthonormal columns.
    pub participation: Vec<Vec<f64>>,
    /// `lamb_dicke[ion][mode]`.
    pub lamb_dicke: Vec<Vec<f64>>,
}

impl ModeStructure {
    pub fn n_modes(&self) -> usize {
        self.frequencies_hz.len()
    }

    pub fn participation_of(&self, ion: usize, mode: usize) -> f64 {
        self.participation[ion][mode]
    }

    pub fn eta(&self, ion: usize, mode: usize) -> f64 {
        self.lamb_dicke[ion][mode]
    }
}

/// Positions plus both axes' modes for one trap configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainModes {
    pub positions: Vec<f64>,
    pub axial: ModeStructure,
    pub radial: ModeStructure,
}

impl ChainModes {
    pub fn compute(cfg: &TrapConfig) -> Result<Self> {
        Ok(Self {
            positions: equilibrium_positions(cfg)?,
            axial: normal_modes(cfg, Axis::Axial)?,
            radial: normal_modes(cfg, Axis::Radial)?,
        })
    }
}

fn force_residual(u: &[f64]) -> DVector<f64> {
    let n = u.len();
    DVector::from_fn(n, |i, _| {
        let mut r = u[i];
        for (j, &uj) in u.iter().enumerate() {
            if j < i {
                r -= 1.0 / (u[i] - uj).powi(2);
            } else if j > i {
                r += 1.0 / (uj - u[i]).powi(2);
            }
        }
        r
    })
}

/// Dimensionless axial Hessian; also the Jacobian of the force residual.
fn axial_hessian(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 1.0;
        for j in 0..n {
            if i != j {
                let c = 2.0 / (u[i] - u[j]).abs().powi(3);
                a[(i, j)] = -c;
                diag += c;
            }
        }
        a[(i, i)] = diag;
    }
    a
}

fn radial_hessian(u: &[f64], beta_sq: f64) -> DMatrix<f64> {
    let n = u.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = beta_sq;
        for j in 0..n {
            if i != j {
                let c = 1.0 / (u[i] - u[j]).abs().powi(3);
                k[(i, j)] = c;
                diag -= c;
            }
        }
        k[(i, i)] = diag;
    }
    k
}

/// Dimensionless equilibrium positions, ascending and antisymmetric about 0.
pub fn equilibrium_positions(cfg: &TrapConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    solve_equilibrium(cfg.n_ions)
}

pub(crate) fn solve_equilibrium(n: usize) -> Result<Vec<f64>> {
    if n == 1 {
        return Ok(vec![0.0]);
    }
    // Uniform-spacing start using the empirical minimum spacing 2.018/N^0.559.
    let spacing = 2.018 / (n as f64).powf(0.559);
    let mut u: Vec<f64> = (0..n).map(|i| (i as f64 - (n as f64 - 1.0) / 2.0) * spacing).collect();
    let mut res = force_residual(&u);
    let mut norm = res.amax();
    for _ in 0..MAX_NEWTON_ITERS {
        if norm < RESIDUAL_TOL {
            break;
        }
        let step = axial_hessian(&u)
            .lu()
            .solve(&res)
            .ok_or(Error::NoConvergence { iterations: 0, residual: norm })?;
        let mut damping = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(x, dx)| x - damping * dx).collect();
            let ordered = trial.windows(2).all(|w| w[1] > w[0]);
            if ordered {
                let r = force_residual(&trial);
                if r.amax() < norm || damping < 1e-6 {
                    u = trial;
                    res = r;
                    norm = res.amax();
                    break;
                }
            }
            damping *= 0.5;
            if damping < 1e-12 {
                return Err(Error::NoConvergence { iterations: MAX_NEWTON_ITERS, residual: norm });
            }
        }
    }
    if norm >= RESIDUAL_TOL {
        return Err(Error::NoConvergence { iterations: MAX_NEWTON_ITERS, residual: norm });
    }
    // Remove any residual asymmetry from round-off.
    let sym: Vec<f64> = (0..n).map(|i| 0.5 * (u[i] - u[n - 1 - i])).collect();
    Ok(sym)
}

/// Sorted (eigenvalue, eigenvector) pairs with a deterministic sign per vector.
fn eigen_sorted(h: DMatrix<f64>, descending: bool) -> Vec<(f64, Vec<f64>)> {
    let n = h.nrows();
    let eig = SymmetricEigen::new(h);
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|m| {
            let mut v: Vec<f64> = eig.eigenvectors.column(m).iter().copied().collect();
            let lead = v.iter().copied().find(|x| x.abs() > 1e-8).unwrap_or(1.0);
            if lead < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            (eig.eigenvalues[m], v)
        })
        .collect();
    pairs.sort_by(|a, b| {
        let o = a.0.partial_cmp(&b.0).expect("finite eigenvalues");
        if descending { o.reverse() } else { o }
    });
    pairs
}

/// Normal modes of `axis`. Axial modes ascend from the COM; radial modes
/// descend from the COM to the zig-zag mode.
pub fn normal_modes(cfg: &TrapConfig, axis: Axis) -> Result<ModeStructure> {
    let u = equilibrium_positions(cfg)?;
    let (hessian, descending) = match axis {
        Axis::Axial => (axial_hessian(&u), false),
        Axis::Radial => {
            let beta = cfg.radial_com_freq_hz / cfg.axial_com_freq_hz;
            (radial_hessian(&u, beta * beta), true)
        }
    };
    let pairs = eigen_sorted(hessian, descending);
    let n = cfg.n_ions;
    let mut frequencies_hz = Vec::with_capacity(n);
    let mut eigenvalues = Vec::with_capacity(n);
    let mut participation = vec![vec![0.0; n]; n];
    for (m, (lambda, v)) in pairs.into_iter().enumerate() {
        if lambda <= 0.0 {
            return Err(Error::ZigZagInstability { mode: m, omega_sq: lambda });
        }
        eigenvalues.push(lambda);
        frequencies_hz.push(cfg.axial_com_freq_hz * lambda.sqrt());
        for (ion, b) in v.into_iter().enumerate() {
            participation[ion][m] = b;
        }
    }
    let mut modes = ModeStructure {
        axis,
        frequencies_hz,
        eigenvalues,
        participation,
        lamb_dicke: Vec::new(),
    };
    modes.lamb_dicke = lamb_dicke_factors(cfg, &modes);
    Ok(modes)
}

/// Lamb-Dicke factor of a single ion oscillating at `freq_hz` with the given
/// k-vector projection.
pub fn single_ion_eta(cfg: &TrapConfig, freq_hz: f64, projection: f64) -> f64 {
    let k = TWO_PI / cfg.laser_wavelength_m;
    let x0 = (HBAR / (2.0 * cfg.ion_mass_kg * TWO_PI * freq_hz)).sqrt();
    k * projection * x0
}

/// `η[ion][mode]` from the single-ion ground-state extent at each mode
/// frequency, weighted by the ion's participation.
pub fn lamb_dicke_factors(cfg: &TrapConfig, modes: &ModeStructure) -> Vec<Vec<f64>> {
    let proj = cfg.projection(modes.axis);
    let per_mode: Vec<f64> = modes
        .frequencies_hz
        .iter()
        .map(|&f| single_ion_eta(cfg, f, proj))
        .collect();
    modes
        .participation
        .iter()
        .map(|row| row.iter().zip(&per_mode).map(|(b, eta)| b * eta).collect())
        .collect()
}
