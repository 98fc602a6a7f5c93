use proptest::prelude::*;

use super::*;
use crate::levels::InternalState as S;

fn config(n_ions: usize, n_max: usize, heating: f64) -> EngineConfig {
    EngineConfig {
        n_ions,
        coolant: 0,
        levels: LevelConfig { zeeman_shift_hz: 100e6, ..LevelConfig::default() },
        mode_index: 0,
        mode_frequency_hz: 100e6,
        eta: 0.05,
        bath: AxialBath::none(),
        n_max,
        heating: HeatingModel { rate_qps: heating },
        recoil: false,
        leakage_tolerance: DEFAULT_LEAKAGE_TOLERANCE,
    }
}

/// Red-sideband π-pulse for n = 1 of the configured mode.
fn rsb_pi(cfg: &EngineConfig, from: S, to: S) -> PulseSpec {
    let t = 50e-6;
    PulseSpec::rsb_shelve(cfg.coolant, from, to, 0, cfg.mode_frequency_hz, 1.0 / (2.0 * t * cfg.eta), t)
}

fn rate_state(engine: &Engine, labels: &[S], fock: FockInit) -> SystemState {
    engine.prepare(Backend::Rate, labels, &fock).unwrap()
}

#[test]
fn mw_pi_pulse_is_an_involution() {
    let engine = Engine::new(config(3, 15, 0.0)).unwrap();
    let mut st = rate_state(&engine, &[S::S_PLUS, S::ZERO, S::ONE], FockInit::Fock(2));
    let before: Vec<_> = (0..3).map(|i| st.populations(i)).collect();
    engine.apply(&mut st, &PulseSpec::mw_pi(20e-6)).unwrap();
    assert!((st.population(1, S::ONE).value - 1.0).abs() < 1e-12);
    assert!((st.population(2, S::ZERO).value - 1.0).abs() < 1e-12);
    engine.apply(&mut st, &PulseSpec::mw_pi(20e-6)).unwrap();
    for (i, b) in before.iter().enumerate() {
        for (x, y) in st.populations(i).iter().zip(b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn mw_half_pulse_splits_evenly() {
    let engine = Engine::new(config(2, 15, 0.0)).unwrap();
    let mut st = rate_state(&engine, &[S::S_PLUS, S::ZERO], FockInit::Fock(0));
    engine.apply(&mut st, &PulseSpec::mw_pi_half(20e-6)).unwrap();
    assert!((st.population(1, S::ONE).value - 0.5).abs() < 1e-12);
}

#[test]
fn rsb_pi_pulse_on_n1_shelves_and_removes_a_quantum() {
    let cfg = config(1, 15, 0.0);
    let engine = Engine::new(cfg.clone()).unwrap();
    let mut st = rate_state(&engine, &[S::S_PLUS], FockInit::Fock(1));
    engine.apply(&mut st, &rsb_pi(&cfg, S::S_PLUS, S::D_MINUS)).unwrap();
    assert!(st.population(0, S::D_MINUS).value > 1.0 - 1e-4);
    assert!(st.fock_distribution()[0] > 1.0 - 1e-4);
}

#[test]
fn rsb_on_ground_state_does_nothing() {
    let cfg = config(1, 15, 0.0);
    let engine = Engine::new(cfg.clone()).unwrap();
    let mut st = rate_state(&engine, &[S::S_PLUS], FockInit::Fock(0));
    engine.apply(&mut st, &rsb_pi(&cfg, S::S_PLUS, S::D_MINUS)).unwrap();
    assert!(st.population(0, S::S_PLUS).value > 1.0 - 1e-4);
    assert!(st.fock_distribution()[0] > 1.0 - 1e-6);
}

#[test]
fn higher_fock_states_under_rotate() {
    let cfg = config(1, 15, 0.0);
    let engine = Engine::new(cfg.clone()).unwrap();
    let mut st = rate_state(&engine, &[S::S_PLUS], FockInit::Fock(2));
    engine.apply(&mut st, &rsb_pi(&cfg, S::S_PLUS, S::D_MINUS)).unwrap();
    let expected = (std::f64::consts::FRAC_PI_2 * 2f64.sqrt()).sin().powi(2);
    assert!((st.population(0, S::D_MINUS).value - expected).abs() < 1e-4);
}

#[test]
fn pulses_on_other_ions_leave_the_coolant_alone() {
    let cfg = config(2, 15, 0.0);
    let engine = Engine::new(cfg).unwrap();
    let mut st = rate_state(&engine, &[S::ONE, S::ONE], FockInit::Fock(0));
    engine.apply(&mut st, &PulseSpec::raman(1, S::ONE, S::S_PLUS, 65e-6)).unwrap();
    assert!((st.population(1, S::S_PLUS).value - 1.0).abs() < 1e-12);
    assert!((st.population(0, S::ONE).value - 1.0).abs() < 1e-12);
}

#[test]
fn repump_branches_uniformly_and_keeps_n() {
    let engine = Engine::new(config(2, 15, 0.0)).unwrap();
    let mut st = rate_state(&engine, &[S::D_MINUS, S::D_PLUS], FockInit::Fock(3));
    engine.apply(&mut st, &PulseSpec::repump(20e-6)).unwrap();
    for ion in 0..2 {
        for s in [S::S_MINUS, S::ONE, S::S_PLUS] {
            assert!((st.population(ion, s).value - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!(st.population(ion, S::ZERO).value.abs() < 1e-15);
    }
    assert!((st.fock_distribution()[3] - 1.0).abs() < 1e-12);
}

#[test]
fn repump_recoil_adds_eta_squared() {
    let mut cfg = config(1, 15, 0.0);
    cfg.recoil = true;
    cfg.eta = 0.2;
    let engine = Engine::new(cfg).unwrap();
    let mut st = rate_state(&engine, &[S::D_ZERO], FockInit::Fock(0));
    engine.apply(&mut st, &PulseSpec::repump(20e-6)).unwrap();
    assert!((st.nbar().value - 0.04).abs() < 1e-12);
}

#[test]
fn heating_only_grows_linearly() {
    let engine = Engine::new(config(1, 80, 33.3)).unwrap();
    let mut st = rate_state(&engine, &[S::ZERO], FockInit::Fock(0));
    engine.heating_step(&mut st, 0.1).unwrap();
    assert!((st.nbar().value - 3.33).abs() < 1e-6, "{}", st.nbar().value);
    assert!((st.time_s() - 0.1).abs() < 1e-15);
}

#[test]
fn heating_from_ground_produces_thermal_state() {
    let engine = Engine::new(config(1, 80, 10.0)).unwrap();
    let mut st = rate_state(&engine, &[S::ZERO], FockInit::Fock(0));
    engine.heating_step(&mut st, 0.2).unwrap();
    let p = st.fock_distribution();
    let q: f64 = 2.0 / 3.0;
    for (n, &pn) in p.iter().enumerate().take(10) {
        let thermal = (1.0 - q) * q.powi(n as i32);
        assert!((pn - thermal).abs() < 1e-9, "n = {n}: {pn} vs {thermal}");
    }
}

#[test]
fn heating_acts_during_pulses() {
    let engine = Engine::new(config(1, 40, 100.0)).unwrap();
    let mut st = rate_state(&engine, &[S::ZERO], FockInit::Fock(0));
    engine.apply(&mut st, &PulseSpec::mw_pi(10e-3)).unwrap();
    assert!((st.nbar().value - 1.0).abs() < 1e-9);
}

#[test]
fn truncation_leak_is_reported() {
    let engine = Engine::new(config(1, 15, 100.0)).unwrap();
    let mut st = rate_state(&engine, &[S::ZERO], FockInit::Fock(0));
    let err = engine.heating_step(&mut st, 0.1).unwrap_err();
    assert!(matches!(err, Error::Leakage { n_max: 15, .. }), "{err}");
}

#[test]
fn too_hot_initial_state_is_rejected() {
    let engine = Engine::new(config(1, 15, 0.0)).unwrap();
    let err = engine.prepare(Backend::Rate, &[S::ZERO], &FockInit::Thermal(10.0)).unwrap_err();
    assert!(matches!(err, Error::Leakage { .. }));
}

#[test]
fn driving_a_bracket_ion_fails() {
    let engine = Engine::new(config(2, 15, 0.0)).unwrap();
    for backend in [Backend::Rate, Backend::MonteCarlo { trajectories: 4, seed: 1 }] {
        let mut st = engine.prepare(backend, &[S::ONE, S::BRACKET], &FockInit::Fock(0)).unwrap();
        let err = engine.apply(&mut st, &PulseSpec::mw_pi(20e-6)).unwrap_err();
        assert_eq!(err, Error::BracketPopulated { ion: 1 });
    }
}

#[test]
fn wrong_mode_sideband_rejected() {
    let cfg = config(1, 15, 0.0);
    let engine = Engine::new(cfg.clone()).unwrap();
    let mut st = rate_state(&engine, &[S::S_PLUS], FockInit::Fock(1));
    let mut pulse = rsb_pi(&cfg, S::S_PLUS, S::D_MINUS);
    pulse.sideband = Some(Sideband { mode: 3, order: -1 });
    assert!(matches!(engine.apply(&mut st, &pulse), Err(Error::InvalidParameter { .. })));
}

#[test]
fn forbidden_drives_rejected() {
    let engine = Engine::new(config(1, 15, 0.0)).unwrap();
    let mut st = rate_state(&engine, &[S::ZERO], FockInit::Fock(0));
    let bad = PulseSpec::quadrupole(0, S::ZERO, S::BRACKET, 1e3, 0.0, 1e-5);
    assert!(engine.apply(&mut st, &bad).is_err());
    let raman_all = PulseSpec { target: Target::All, ..PulseSpec::raman(0, S::ONE, S::S_PLUS, 1e-5) };
    assert!(engine.apply(&mut st, &raman_all).is_err());
}

#[test]
fn config_validation() {
    let bad = [
        EngineConfig { n_ions: 0, ..config(1, 15, 0.0) },
        EngineConfig { n_ions: 65, ..config(1, 15, 0.0) },
        EngineConfig { coolant: 3, ..config(2, 15, 0.0) },
        EngineConfig { eta: 1.5, ..config(1, 15, 0.0) },
        EngineConfig { n_max: 1, ..config(1, 15, 0.0) },
        EngineConfig { heating: HeatingModel { rate_qps: -1.0 }, ..config(1, 15, 0.0) },
    ];
    for c in bad {
        assert!(Engine::new(c).is_err());
    }
}

#[test]
fn monte_carlo_is_seed_deterministic_across_thread_counts() {
    let cfg = config(3, 30, 50.0);
    let engine = Engine::new(cfg.clone()).unwrap();
    let steps: Vec<Step> = [
        PulseSpec::mw_pi(20e-6),
        rsb_pi(&cfg, S::S_PLUS, S::D_MINUS),
        PulseSpec::repump(20e-6),
        PulseSpec::idle(5e-3),
    ]
    .into_iter()
    .map(Step::Pulse)
    .chain([Step::Sample])
    .collect();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut st = engine
                .prepare(Backend::MonteCarlo { trajectories: 500, seed: 42 }, &[S::S_PLUS, S::ZERO, S::ONE], &FockInit::Thermal(2.0))
                .unwrap();
            engine.run(&mut st, &steps).unwrap()
        })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn monte_carlo_tracks_rate_mode() {
    let cfg = config(2, 30, 20.0);
    let engine = Engine::new(cfg.clone()).unwrap();
    let steps: Vec<Step> = [
        rsb_pi(&cfg, S::S_PLUS, S::D_MINUS),
        PulseSpec::repump(20e-6),
        PulseSpec::raman(0, S::ONE, S::S_PLUS, 65e-6),
        rsb_pi(&cfg, S::S_PLUS, S::D_MINUS),
    ]
    .into_iter()
    .map(Step::Pulse)
    .collect();
    let labels = [S::S_PLUS, S::ONE];
    let mut rate = engine.prepare(Backend::Rate, &labels, &FockInit::Thermal(1.5)).unwrap();
    let mut mc = engine.prepare(Backend::MonteCarlo { trajectories: 20_000, seed: 7 }, &labels, &FockInit::Thermal(1.5)).unwrap();
    engine.run(&mut rate, &steps).unwrap();
    engine.run(&mut mc, &steps).unwrap();
    let (r, m) = (rate.nbar().value, mc.nbar());
    assert!((r - m.value).abs() < 4.0 * m.stderr, "{r} vs {m:?}");
    for (p, q) in rate.populations(0).iter().zip(mc.populations(0)) {
        let sigma = (p * (1.0 - p) / 20_000.0).sqrt().max(1e-4);
        assert!((p - q).abs() < 4.0 * sigma, "{p} vs {q}");
    }
}

#[test]
fn suggested_truncation_bounds_the_tail() {
    assert_eq!(suggest_n_max(0.0, 1e-3), 15);
    assert_eq!(suggest_n_max(0.1, 1e-3), 15);
    let n = suggest_n_max(10.0, 1e-3);
    let q: f64 = 10.0 / 11.0;
    assert!(q.powi(n as i32 - 1) <= 1e-4);
    assert!(q.powi(n as i32 - 2) > 1e-4);
}

fn any_pulse() -> impl Strategy<Value = PulseSpec> {
    let cfg = config(2, 20, 0.0);
    prop_oneof![
        (1e-6..1e-4f64).prop_map(PulseSpec::mw_pi),
        (1e-6..1e-4f64).prop_map(PulseSpec::mw_pi_half),
        (1e-6..1e-4f64).prop_map(|t| PulseSpec::raman(0, S::ONE, S::S_PLUS, t)),
        (1e-6..2e-4f64, 0.2..2.0f64).prop_map(move |(t, k)| {
            let mut p = rsb_pi(&cfg, S::S_MINUS, S::D_PLUS);
            p.duration_s = t;
            p.rabi_hz *= k;
            p
        }),
        (1e-6..1e-4f64).prop_map(PulseSpec::repump),
        (0.0..1e-3f64).prop_map(PulseSpec::idle),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rate_mode_conserves_probability(pulses in prop::collection::vec(any_pulse(), 1..12), nbar in 0.0..1.5f64) {
        let engine = Engine::new(config(2, 20, 30.0)).unwrap();
        let mut st = engine.prepare(Backend::Rate, &[S::S_PLUS, S::ONE], &FockInit::Thermal(nbar)).unwrap();
        let steps: Vec<Step> = pulses.into_iter().map(Step::Pulse).collect();
        engine.run(&mut st, &steps).unwrap();
        let r = st.rate_state().unwrap();
        prop_assert!((r.total() - 1.0).abs() < 1e-9);
        prop_assert!(r.joint.iter().all(|&p| p >= -1e-15));
        for ion in 0..2 {
            prop_assert!((st.populations(ion).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn cooling_without_heating_never_heats(n in 1u32..15) {
        let cfg = config(1, 20, 0.0);
        let engine = Engine::new(cfg.clone()).unwrap();
        let mut st = engine.prepare(Backend::Rate, &[S::S_PLUS], &FockInit::Fock(n)).unwrap();
        let before = st.nbar().value;
        engine.apply(&mut st, &rsb_pi(&cfg, S::S_PLUS, S::D_MINUS)).unwrap();
        engine.apply(&mut st, &PulseSpec::repump(20e-6)).unwrap();
        prop_assert!(st.nbar().value <= before + 1e-6);
    }
}

#[test]
fn rsb_rabi_without_axial_coupling() {
    let r = effective_rsb_rabi(100e3, 0.05, &[0.0, 0.0], 4, &[10.0, 3.0]).unwrap();
    assert!((r - 100e3 * 0.05 * 2.0).abs() < 1e-9);
    assert!(effective_rsb_rabi(100e3, 0.05, &[], 0, &[]).is_err());
    assert!(effective_rsb_rabi(100e3, 0.05, &[0.1], 1, &[]).is_err());
}

#[test]
fn thermal_axial_bath_mean_matches_first_order_correction() {
    let (eta, nbar) = (0.09, 12.0);
    let bath = AxialBath::thermal(&[eta], &[nbar], 64).unwrap();
    assert!((bath.mean_factor() - (1.0 - eta * eta * (nbar + 0.5))).abs() < 1e-12);
    let binned: f64 = bath.factors().iter().sum::<f64>() * bath.weight();
    assert!((binned - bath.mean_factor()).abs() < 3e-3);
}

#[test]
fn light_shift_of_a_single_carrier() {
    assert!((light_shift(&[(125e3, 10e6)]).unwrap() - 390.625).abs() < 1e-9);
    assert!(light_shift(&[(125e3, 0.0)]).is_err());
    assert_eq!(light_shift(&[(1e3, 1e6), (1e3, -1e6)]).unwrap(), 0.0);
}

#[test]
fn resonant_pi_and_detuned_ceiling() {
    assert!((rabi_probability(1e4, 0.0, 50e-6) - 1.0).abs() < 1e-12);
    assert_eq!(rabi_probability(0.0, 1e3, 1.0), 0.0);
    // Peak of the detuned response at the generalized π-time.
    let (om, de) = (3e3, 4e3);
    let t = 1.0 / (2.0 * 5e3);
    assert!((rabi_probability(om, de, t) - 9.0 / 25.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn transfer_probability_is_bounded(om in 0.0..1e6f64, de in -1e7..1e7f64, t in 0.0..1e-2f64) {
        let p = rabi_probability(om, de, t);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
        prop_assert!(p <= om * om / (om * om + de * de) + 1e-12 || de == 0.0);
    }

    #[test]
    fn axial_correction_decreases_with_occupation(
        eta in prop::collection::vec(0.0..0.08f64, 1..5),
        n in prop::collection::vec(0.0..40.0f64, 5),
        k in 0usize..5,
        bump in 0.1..20.0f64,
    ) {
        let m = eta.len();
        let n = &n[..m];
        let k = k % m;
        let mut hotter = n.to_vec();
        hotter[k] += bump;
        let a = effective_rsb_rabi(1e5, 0.05, &eta, 1, n).unwrap();
        let b = effective_rsb_rabi(1e5, 0.05, &eta, 1, &hotter).unwrap();
        prop_assert!(b <= a + 1e-12);
    }
}
