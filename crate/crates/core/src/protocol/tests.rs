use proptest::prelude::*;

use super::*;
use crate::engine::{Sideband, Target};
use crate::levels::InternalState as S;
use crate::scenario::{com_suppression, mode_setup, tilt_suppression};

fn default_cycle(mode: usize, coolant: usize) -> Result<CoolingCycle> {
    let modes = ChainModes::compute(&TrapConfig::default()).unwrap();
    compile_cycle(&modes.radial, mode, coolant, &CycleCalibration::default(), 1.0, DEFAULT_PARTICIPATION_FLOOR)
}

fn two_ion_engine(coolant: usize) -> Engine {
    let trap = TrapConfig { n_ions: 2, ..TrapConfig::default() };
    let setup = CoolingSetup { axial_nbar: AxialNbar::Values(vec![0.0; 2]), ..CoolingSetup::new(trap, 0, coolant) };
    setup.build(HeatingModel::none(), Some(15), 0.0).unwrap().0
}

#[test]
fn prep_puts_coolant_in_s_plus_and_returns_data_ions() {
    for coolant in [0, 1] {
        let engine = two_ion_engine(coolant);
        let prep = compile_prep(2, coolant, &CycleCalibration::default()).unwrap();
        let st = prepared_state(&engine, Backend::Rate, &FockInit::Fock(0), &prep).unwrap();
        assert!((st.population(coolant, S::S_PLUS).value - 1.0).abs() < 1e-12);
        assert!((st.population(1 - coolant, S::ZERO).value - 1.0).abs() < 1e-12);
    }
    assert!(compile_prep(2, 2, &CycleCalibration::default()).is_err());
}

#[test]
fn raman_error_leaves_residual_in_one_then_recycles_it() {
    let engine = two_ion_engine(0);
    let eps: f64 = 0.04;
    let t = 65e-6;
    let mut raman = PulseSpec::raman(0, S::ONE, S::S_PLUS, t);
    raman.rabi_hz = (1.0 - eps).sqrt().asin() / (std::f64::consts::PI * t);
    let mut st = engine.prepare(Backend::Rate, &[S::ZERO, S::ZERO], &FockInit::Fock(0)).unwrap();
    engine.apply(&mut st, &PulseSpec::mw_pi(20e-6)).unwrap();
    engine.apply(&mut st, &raman).unwrap();
    assert!((st.population(0, S::ONE).value - eps).abs() < 1e-12);
    // The next cycle's Raman step moves the residual on.
    engine.apply(&mut st, &PulseSpec::raman(0, S::ONE, S::S_PLUS, t)).unwrap();
    assert!((st.population(0, S::ONE).value - (1.0 - eps)).abs() < 1e-12);
}

#[test]
fn com_cycle_with_edge_coolant() {
    let cycle = default_cycle(0, 0).unwrap();
    assert!((cycle.duration_s() - 295e-6).abs() < 1e-15);
    assert!((cycle.program(10).duration_s() - 2.95e-3).abs() < 1e-12);
    let modes = ChainModes::compute(&TrapConfig::default()).unwrap();
    let nu = modes.radial.frequencies_hz[0];
    for (p, from, to) in [(&cycle.shelve_plus, S::S_PLUS, S::D_MINUS), (&cycle.shelve_minus, S::S_MINUS, S::D_PLUS)] {
        assert_eq!(p.transition, (from, to));
        assert_eq!(p.target, Target::Ion(0));
        assert_eq!(p.sideband, Some(Sideband { mode: 0, order: -1 }));
        assert_eq!(p.detuning_hz, -nu);
    }
    assert_eq!(cycle.raman.transition, (S::ONE, S::S_PLUS));
    assert_eq!(cycle.repump.kind, PulseKind::Repump);
}

#[test]
fn shelve_rabi_is_the_n1_pi_time() {
    let modes = ChainModes::compute(&TrapConfig::default()).unwrap();
    let f = 0.8;
    let cycle = compile_cycle(&modes.radial, 1, 0, &CycleCalibration::default(), f, DEFAULT_PARTICIPATION_FLOOR).unwrap();
    let eta = modes.radial.lamb_dicke[0][1].abs();
    for p in [&cycle.shelve_plus, &cycle.shelve_minus] {
        let eff = p.rabi_hz * eta * f;
        assert!((eff * p.duration_s - 0.5).abs() < 1e-12);
    }
}

#[test]
fn zigzag_with_centre_neighbour_is_valid() {
    assert!(default_cycle(4, 1).is_ok());
    assert!(default_cycle(3, 1).is_ok());
}

#[test]
fn weak_participation_names_alternatives() {
    match default_cycle(4, 0) {
        Err(Error::WeakParticipation { ion, mode, participation, alternatives, .. }) => {
            assert_eq!((ion, mode), (0, 4));
            assert!(participation.abs() < DEFAULT_PARTICIPATION_FLOOR);
            assert!(alternatives.contains(&1) && alternatives.contains(&3));
            assert!(!alternatives.contains(&0) && !alternatives.contains(&4));
        }
        other => panic!("expected a participation error, got {other:?}"),
    }
}

#[test]
fn duty_cycles() {
    let com = com_suppression();
    let c = com.setup.cycle().unwrap();
    assert!((duty_cycle(&com.schedule, &c).unwrap() - 0.705).abs() < 1e-12);
    let tilt = tilt_suppression();
    let c = tilt.setup.cycle().unwrap();
    assert!((duty_cycle(&tilt.schedule, &c).unwrap() - 0.935).abs() < 1e-12);
    let idle = CoolingSchedule { pulses_per_burst: 0, ..tilt.schedule };
    assert_eq!(duty_cycle(&idle, &c).unwrap(), 1.0);
    let crowded = CoolingSchedule { pulses_per_burst: 40, ..com.schedule };
    assert!(matches!(duty_cycle(&crowded, &c), Err(Error::BurstExceedsPeriod { .. })));
}

#[test]
fn compiled_sequence_order() {
    let prep = compile_prep(5, 0, &CycleCalibration::default()).unwrap();
    let cycle = default_cycle(0, 0).unwrap();
    let kinds = sequence_kinds(&prep, &cycle, 3);
    let mut expected = vec![PulseKind::MwPi, PulseKind::RamanTwoTone, PulseKind::MwPi];
    for _ in 0..3 {
        expected.extend([PulseKind::RsbShelve, PulseKind::RsbShelve, PulseKind::RamanTwoTone, PulseKind::Repump]);
    }
    assert_eq!(kinds, expected);
}

#[test]
fn ground_state_stays_cold() {
    let setup = mode_setup(0);
    let (engine, cycle) = setup.build(HeatingModel::none(), Some(15), 0.0).unwrap();
    let mut st = prepared_state(&engine, Backend::Rate, &FockInit::Fock(0), &setup.prep().unwrap()).unwrap();
    let trace = run_cooling(&engine, &mut st, &cycle, 20).unwrap();
    // Only off-resonant blue-sideband excitation remains.
    assert!(trace.iter().all(|p| p.nbar.value < 1e-3), "{:?}", trace.last());
}

#[test]
fn one_cycle_on_n1_removes_the_quantum() {
    let setup = CoolingSetup { axial_nbar: AxialNbar::Values(vec![0.0; 5]), ..mode_setup(0) };
    let (engine, cycle) = setup.build(HeatingModel::none(), Some(15), 0.0).unwrap();
    let mut st = prepared_state(&engine, Backend::Rate, &FockInit::Fock(1), &setup.prep().unwrap()).unwrap();
    let mut shelved_state = st.clone();
    engine.apply(&mut shelved_state, &cycle.shelve_plus).unwrap();
    // Everything that left (S,1,+1) along the red sideband sits at n = 0.
    assert!(shelved_state.population(0, S::D_MINUS).value > 0.95);
    assert!((shelved_state.fock_distribution()[0] - 1.0).abs() < 1e-9);
    let trace = run_cooling(&engine, &mut st, &cycle, 1).unwrap();
    assert!(trace[1].nbar.value < 1e-6, "{:?}", trace[1]);
}

#[test]
fn run_cooling_never_heats_without_heating() {
    let setup = mode_setup(2);
    let (engine, cycle) = setup.build(HeatingModel::none(), None, 3.0).unwrap();
    let mut st = prepared_state(&engine, Backend::Rate, &FockInit::Thermal(3.0), &setup.prep().unwrap()).unwrap();
    let trace = run_cooling(&engine, &mut st, &cycle, 40).unwrap();
    assert_eq!(trace.len(), 41);
    for w in trace.windows(2) {
        assert!(w[1].nbar.value <= w[0].nbar.value + 1e-9, "{:?}", w);
    }
    assert!(run_cooling(&engine, &mut st, &cycle, 0).is_err());
}

#[test]
fn no_pulses_means_pure_heating() {
    let sc = com_suppression();
    let schedule = CoolingSchedule { pulses_per_burst: 0, total_duration_s: 0.05, ..sc.schedule };
    let (r, _) = simulate_suppression(&sc.setup, &schedule, sc.heating, Backend::Rate, 0.5, Some(80)).unwrap();
    assert_eq!(r.steady, SteadyState::Unbounded);
    for p in &r.samples {
        let expected = 0.5 + sc.heating.rate_qps * p.time_s;
        assert!((p.nbar.value - expected).abs() < 1e-9, "{} vs {expected}", p.nbar.value);
    }
}

#[test]
fn steady_state_detection_on_synthetic_series() {
    let pts = |f: &dyn Fn(f64) -> f64| -> Vec<TimePoint> {
        (1..=30).map(|k| TimePoint { time_s: k as f64 * 0.01, nbar: Estimate::exact(f(k as f64)) }).collect()
    };
    match detect_steady_state(&pts(&|_| 0.5), 5, 0.05) {
        SteadyState::Reached { time_s, nbar } => {
            assert!((time_s - 0.10).abs() < 1e-12);
            assert_eq!(nbar.value, 0.5);
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(detect_steady_state(&pts(&|k| k), 5, 0.05), SteadyState::NotReached { .. }));
    match detect_steady_state(&pts(&|k| 0.4 + (-k / 2.0).exp()), 5, 0.05) {
        SteadyState::Reached { time_s, .. } => assert!(time_s > 0.10),
        other => panic!("{other:?}"),
    }
}

#[test]
fn steady_state_grows_with_heating_rate() {
    let sc = com_suppression();
    let values: Vec<f64> = [5.0, 15.0, 33.0]
        .iter()
        .map(|&g| {
            let (r, _) = simulate_suppression(&sc.setup, &sc.schedule, HeatingModel { rate_qps: g }, Backend::Rate, 0.0, None).unwrap();
            r.steady.nbar().unwrap().value
        })
        .collect();
    assert!(values.windows(2).all(|w| w[0] <= w[1]), "{values:?}");
}

#[test]
fn steady_state_forgets_the_initial_temperature() {
    let sc = com_suppression();
    let run = |n0: f64, seed: u64| {
        let backend = Backend::MonteCarlo { trajectories: 2000, seed };
        simulate_suppression(&sc.setup, &sc.schedule, sc.heating, backend, n0, None).unwrap().0.steady
    };
    let (a, b) = (run(0.0, 11), run(5.0, 12));
    let (SteadyState::Reached { nbar: a, .. }, SteadyState::Reached { nbar: b, .. }) = (a, b) else {
        panic!("both runs should settle: {a:?} {b:?}");
    };
    let sigma = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    assert!((a.value - b.value).abs() < 3.0 * sigma, "{a:?} vs {b:?}");
}

#[test]
fn zero_pulse_sweep_point_is_unbounded() {
    let sc = com_suppression();
    let opts = SweepOptions { total_duration_s: 0.05, runs: 5, backend: Backend::Rate, initial_nbar: 0.0, n_max: None };
    let pts = sweep_steady_state(&sc.setup, &[0], 10e-3, sc.heating, &opts).unwrap();
    assert_eq!(pts[0].nbar, None);
    assert_eq!(pts[0].duty_cycle, 1.0);
}

#[test]
fn coolant_reassignment_readdresses_the_cycle() {
    let a = default_cycle(1, 0).unwrap();
    let b = default_cycle(1, 1).unwrap();
    assert_eq!(b.shelve_plus.target, Target::Ion(1));
    assert_eq!(b.raman.target, Target::Ion(1));
    assert_ne!(a.shelve_plus.rabi_hz, b.shelve_plus.rabi_hz);
}

#[test]
fn bose_occupation_limits() {
    let kt_over_h = BOLTZMANN * 1.0 / PLANCK;
    assert!((bose_nbar(1e3, 1.0) - (kt_over_h / 1e3 - 0.5)).abs() / bose_nbar(1e3, 1.0) < 1e-6);
    assert!(bose_nbar(1e12, 1e-3) < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn duty_plus_burst_is_the_period(pulses in 0usize..30, period in 1e-2..1.0f64) {
        let cycle = default_cycle(0, 0).unwrap();
        let s = CoolingSchedule { pulses_per_burst: pulses, period_s: period, total_duration_s: period, target_mode: 0, coolant: 0 };
        let duty = duty_cycle(&s, &cycle).unwrap();
        prop_assert!((duty * period + s.burst_s(&cycle) - period).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&duty));
    }
}
