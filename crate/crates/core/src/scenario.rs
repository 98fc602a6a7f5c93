//! Default parameter sets for the standard 5-ion experiments.
//!
//! Trap: five ¹⁷¹Yb⁺ ions, 330 kHz axial COM, 2.5 MHz probed radial COM,
//! 45° shelving beam (axial projection cos 45°, radial projection 1.4 times
//! smaller). After Doppler cooling the whole chain sits at
//! [`CHAIN_TEMPERATURE_K`], about 2.7 times the 370 nm two-level limit
//! ħΓ/2k_B ≈ 0.47 mK; that puts the radial COM mode at n̄ ≈ 10 and the
//! axial COM spectator at n̄ ≈ 79.
//!
//! Coolant assignment: the edge ion cools the COM, tilt and third radial
//! modes; the ion next to the centre cools the fourth and zig-zag modes,
//! where the edge ion barely participates.

use serde::{Deserialize, Serialize};

use crate::coherence::{CalibratedNoise, EchoConfig, EchoSchedule, NoiseProcess, ShiftBudget};
use crate::engine::HeatingModel;
use crate::modes::TrapConfig;
use crate::protocol::{AxialNbar, CoolingSchedule, CoolingSetup, CycleCalibration};
use crate::Result;

/// Heating rate of the radial COM mode, quanta/s.
pub const COM_HEATING_QPS: f64 = 33.3;
/// Heating rate of the radial tilt mode, quanta/s.
pub const TILT_HEATING_QPS: f64 = 5.2;
/// Temperature of the Doppler-cooled chain, K.
pub const CHAIN_TEMPERATURE_K: f64 = 1.26e-3;
/// Time step of the calibrated intensity-noise process, s.
pub const NOISE_STEP_S: f64 = 0.01;

/// Coolant used for radial `mode` of an `n_ions` chain.
pub fn default_coolant(n_ions: usize, mode: usize) -> usize {
    if mode <= 2 || n_ions < 4 {
        0
    } else {
        n_ions / 2 - 1
    }
}

/// Cooling setup for radial `mode` with the default trap and coolant.
pub fn mode_setup(mode: usize) -> CoolingSetup {
    let trap = TrapConfig::default();
    let coolant = default_coolant(trap.n_ions, mode);
    CoolingSetup { axial_nbar: AxialNbar::Temperature { kelvin: CHAIN_TEMPERATURE_K }, ..CoolingSetup::new(trap, mode, coolant) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuppressionScenario {
    pub setup: CoolingSetup,
    pub schedule: CoolingSchedule,
    pub heating: HeatingModel,
}

/// COM mode: 10 cycles every 10 ms against 33.3 q/s.
pub fn com_suppression() -> SuppressionScenario {
    let setup = mode_setup(0);
    SuppressionScenario {
        schedule: CoolingSchedule {
            pulses_per_burst: 10,
            period_s: 10e-3,
            total_duration_s: 0.3,
            target_mode: 0,
            coolant: setup.coolant,
        },
        heating: HeatingModel { rate_qps: COM_HEATING_QPS },
        setup,
    }
}

/// Tilt mode: 10 cycles of the 325 µs tilt calibration every 50 ms against 5.2 q/s.
pub fn tilt_suppression() -> SuppressionScenario {
    let mut setup = mode_setup(1);
    setup.calib = CycleCalibration::tilt();
    SuppressionScenario {
        schedule: CoolingSchedule {
            pulses_per_burst: 10,
            period_s: 50e-3,
            total_duration_s: 1.0,
            target_mode: 1,
            coolant: setup.coolant,
        },
        heating: HeatingModel { rate_qps: TILT_HEATING_QPS },
        setup,
    }
}

/// Spin echo under the COM schedule with noise calibrated to the default Allan anchors.
pub fn com_echo(shots: usize, seed: u64) -> Result<EchoConfig> {
    let sc = com_suppression();
    let cycle = sc.setup.cycle()?;
    Ok(EchoConfig {
        schedule: EchoSchedule::from_schedule(&sc.schedule, &cycle)?,
        budget: ShiftBudget::table_default(),
        noise: NoiseProcess::Calibrated(CalibratedNoise::from_anchors(&CalibratedNoise::default_anchors(), NOISE_STEP_S)?),
        wait_times_s: (1..=12).map(|k| 0.1 * k as f64).collect(),
        shots,
        seed,
        background_t_s: None,
    })
}
