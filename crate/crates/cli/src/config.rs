//! Run configuration: one JSON document, every section optional, every
//! physical field carrying its unit as a suffix. Unknown keys are errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sympcool::coherence::{AllanAnchor, AllanMethod, CalibratedNoise, NoiseProcess, ShiftBudget};
use sympcool::engine::{Backend, HeatingModel};
use sympcool::levels::LevelConfig;
use sympcool::modes::TrapConfig;
use sympcool::protocol::{AxialNbar, CoolingSchedule, CoolingSetup, CycleCalibration, DEFAULT_PARTICIPATION_FLOOR};
use sympcool::scenario::{default_coolant, CHAIN_TEMPERATURE_K, COM_HEATING_QPS, NOISE_STEP_S};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub trap: TrapConfig,
    pub levels: LevelConfig,
    pub engine: EngineSection,
    pub cooling: CoolingSection,
    pub schedule: ScheduleSection,
    pub heating: HeatingModel,
    pub sweep: SweepSection,
    pub scan: ScanSection,
    pub probe: ProbeSection,
    pub noise: NoiseSection,
    pub coherence: CoherenceSection,
    pub allan: AllanSection,
    pub scatter: ScatterSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    MonteCarlo,
    Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSection {
    pub backend: BackendKind,
    /// Fock truncation; chosen from the expected peak n̄ when absent.
    pub n_max: Option<usize>,
    pub trajectories: usize,
    pub master_seed: u64,
}

impl Default for EngineSection {
    fn default() -> Self {
        Self { backend: BackendKind::Rate, n_max: None, trajectories: 2000, master_seed: 1 }
    }
}

impl EngineSection {
    pub fn backend(&self) -> Backend {
        match self.backend {
            BackendKind::Rate => Backend::Rate,
            BackendKind::MonteCarlo => Backend::MonteCarlo { trajectories: self.trajectories, seed: self.master_seed },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoolingSection {
    /// Radial mode index, COM first.
    pub mode: usize,
    /// Coolant ion; the default assignment for the mode when absent.
    pub coolant: Option<usize>,
    pub calibration: CycleCalibration,
    pub axial_nbar: AxialNbar,
    pub axial_bins: usize,
    pub participation_floor: f64,
    pub recoil: bool,
    pub initial_nbar: f64,
    pub cycles: usize,
}

impl Default for CoolingSection {
    fn default() -> Self {
        Self {
            mode: 0,
            coolant: None,
            calibration: CycleCalibration::default(),
            axial_nbar: AxialNbar::Temperature { kelvin: CHAIN_TEMPERATURE_K },
            axial_bins: 32,
            participation_floor: DEFAULT_PARTICIPATION_FLOOR,
            recoil: false,
            initial_nbar: 10.0,
            cycles: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub pulses_per_burst: usize,
    pub period_s: f64,
    pub total_duration_s: f64,
    /// n̄ of the target mode when the schedule starts.
    pub initial_nbar: f64,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self { pulses_per_burst: 10, period_s: 10e-3, total_duration_s: 0.3, initial_nbar: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub pulses: Vec<usize>,
    /// Independent runs per point (Monte-Carlo only).
    pub runs: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { pulses: (2..=30).collect(), runs: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub ion: usize,
    pub rabi_hz: f64,
    pub duration_s: f64,
    pub start_hz: f64,
    pub stop_hz: f64,
    pub step_hz: f64,
    /// Radial n̄ per mode; Bose occupation at the chain temperature when absent.
    pub radial_nbar: Option<Vec<f64>>,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            ion: 0,
            rabi_hz: 20e3,
            duration_s: 50e-6,
            start_hz: -3e6,
            stop_hz: 3e6,
            step_hz: 2e3,
            radial_nbar: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSection {
    pub nbar: Vec<f64>,
    /// Probe length as a fraction of the n = 1 sideband π-time.
    pub fraction: f64,
    pub duration_s: f64,
    pub shots: usize,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self { nbar: vec![0.1, 0.5, 1.0, 2.0], fraction: 0.1, duration_s: 1e-3, shots: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "process", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSection {
    None,
    Static { eps: f64 },
    ShotToShot { sigma: f64 },
    Calibrated { anchors: Vec<AllanAnchor>, step_s: f64 },
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection::Calibrated { anchors: CalibratedNoise::default_anchors().to_vec(), step_s: NOISE_STEP_S }
    }
}

impl NoiseSection {
    pub fn process(&self) -> sympcool::Result<NoiseProcess> {
        Ok(match self {
            NoiseSection::None => NoiseProcess::None,
            NoiseSection::Static { eps } => NoiseProcess::Static { eps: *eps },
            NoiseSection::ShotToShot { sigma } => NoiseProcess::ShotToShot { sigma: *sigma },
            NoiseSection::Calibrated { anchors, step_s } => NoiseProcess::Calibrated(CalibratedNoise::from_anchors(anchors, *step_s)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoherenceSection {
    pub budget: ShiftBudget,
    /// σ_ε values fed to the analytic predictor.
    pub sigma_eps: Vec<f64>,
    pub wait_times_s: Vec<f64>,
    pub shots: usize,
    pub background_t_s: Option<f64>,
}

impl Default for CoherenceSection {
    fn default() -> Self {
        Self {
            budget: ShiftBudget::table_default(),
            sigma_eps: vec![1.43e-3, 0.71e-3],
            wait_times_s: (1..=12).map(|k| 0.1 * k as f64).collect(),
            shots: 1000,
            background_t_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AllanSection {
    /// CSV with `time_s,value` rows.
    pub input: Option<PathBuf>,
    pub taus_s: Vec<f64>,
    pub method: AllanMethod,
    pub normalized: bool,
}

impl Default for AllanSection {
    fn default() -> Self {
        Self { input: None, taus_s: vec![0.02, 0.05, 0.1, 0.2, 0.5, 1.0], method: AllanMethod::NonOverlapping, normalized: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatterSection {
    pub wavelength_m: f64,
    pub spacing_m: f64,
}

impl Default for ScatterSection {
    fn default() -> Self {
        Self { wavelength_m: 297e-9, spacing_m: 5e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json] }
    }
}

/// The COM suppression scenario.
impl Default for RunConfig {
    fn default() -> Self {
        Self {
            trap: TrapConfig::default(),
            levels: LevelConfig::default(),
            engine: EngineSection::default(),
            cooling: CoolingSection::default(),
            schedule: ScheduleSection::default(),
            heating: HeatingModel { rate_qps: COM_HEATING_QPS },
            sweep: SweepSection::default(),
            scan: ScanSection::default(),
            probe: ProbeSection::default(),
            noise: NoiseSection::default(),
            coherence: CoherenceSection::default(),
            allan: AllanSection::default(),
            scatter: ScatterSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl RunConfig {
    pub fn coolant(&self) -> usize {
        self.cooling.coolant.unwrap_or_else(|| default_coolant(self.trap.n_ions, self.cooling.mode))
    }

    pub fn setup(&self) -> CoolingSetup {
        let c = &self.cooling;
        CoolingSetup {
            trap: self.trap.clone(),
            levels: self.levels.clone(),
            mode: c.mode,
            coolant: self.coolant(),
            calib: c.calibration,
            axial_nbar: c.axial_nbar.clone(),
            axial_bins: c.axial_bins,
            participation_floor: c.participation_floor,
            recoil: c.recoil,
        }
    }

    pub fn schedule(&self) -> CoolingSchedule {
        CoolingSchedule {
            pulses_per_burst: self.schedule.pulses_per_burst,
            period_s: self.schedule.period_s,
            total_duration_s: self.schedule.total_duration_s,
            target_mode: self.cooling.mode,
            coolant: self.coolant(),
        }
    }
}

const UNIT_SUFFIXES: &[&str] = &[
    "hz", "khz", "mhz", "ghz", "s", "ms", "us", "ns", "m", "mm", "um", "nm", "kg", "g", "k", "mk", "uk", "qps",
];

fn unit_split(key: &str) -> Option<(&str, &str)> {
    let (stem, unit) = key.rsplit_once('_')?;
    UNIT_SUFFIXES.contains(&unit).then_some((stem, unit))
}

/// Backtick-quoted names in a serde "unknown field" message: the offending
/// key first, then the expected ones.
fn quoted(msg: &str) -> Vec<&str> {
    msg.split('`').skip(1).step_by(2).collect()
}

fn classify(path: String, msg: String) -> CliError {
    if msg.starts_with("unknown field") || msg.starts_with("unknown variant") {
        let names = quoted(&msg);
        if let Some((&bad, expected)) = names.split_first() {
            if let Some((stem, unit)) = unit_split(bad) {
                let same_stem = expected.iter().find(|e| unit_split(e).is_some_and(|(s, u)| s == stem && u != unit));
                if let Some(want) = same_stem {
                    return CliError::config("unit_mismatch", path, format!("`{bad}` has the wrong unit; expected `{want}`"));
                }
            }
        }
        let path = match names.first() {
            Some(bad) if msg.starts_with("unknown field") && !path.ends_with(bad) => {
                if path.is_empty() || path == "." { bad.to_string() } else { format!("{path}.{bad}") }
            }
            _ => path,
        };
        return CliError::config("unknown_key", path, msg);
    }
    CliError::config("invalid_value", path, msg)
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            CliError::config("syntax", String::new(), inner.to_string())
        } else {
            // serde_json appends " at line L column C"; keep only the message.
            let msg = inner.to_string();
            let msg = msg.rsplit_once(" at line ").map_or(msg.as_str(), |(m, _)| m).to_string();
            classify(path, msg)
        }
    })?;
    Ok(cfg)
}

pub fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text)
}
