use proptest::prelude::*;

use super::*;
use crate::engine::{AxialBath, Backend, EngineConfig, FockInit, HeatingModel, DEFAULT_LEAKAGE_TOLERANCE};
use crate::levels::{InternalState as S, LevelConfig};
use crate::modes::TrapConfig;

fn engine(n_max: usize) -> Engine {
    Engine::new(EngineConfig {
        n_ions: 2,
        coolant: 0,
        levels: LevelConfig { zeeman_shift_hz: 100e6, ..LevelConfig::default() },
        mode_index: 0,
        mode_frequency_hz: 100e6,
        eta: 0.05,
        bath: AxialBath::none(),
        n_max,
        heating: HeatingModel::none(),
        recoil: false,
        leakage_tolerance: DEFAULT_LEAKAGE_TOLERANCE,
    })
    .unwrap()
}

#[test]
fn ratio_method_is_exact_on_thermal_states() {
    let e = engine(120);
    for nbar in [0.1, 0.5, 1.0, 2.0, 4.0] {
        let st = e.prepare(Backend::Rate, &[S::ZERO, S::ZERO], &FockInit::Thermal(nbar)).unwrap();
        for fraction in [0.1, 0.9] {
            let probe = SidebandProbe::weak(0.05, 1.0, fraction, 1e-3);
            let est = probe_nbar(&e, &st, &probe).unwrap();
            assert!((est.nbar - nbar).abs() < 1e-6 * nbar.max(1.0), "{nbar}: {}", est.nbar);
        }
    }
}

#[test]
fn ratio_method_overestimates_a_fock_state() {
    // A Fock state is not thermal; the ratio returns a biased value.
    let e = engine(30);
    let st = e.prepare(Backend::Rate, &[S::ZERO, S::ZERO], &FockInit::Fock(1)).unwrap();
    let est = probe_nbar(&e, &st, &SidebandProbe::weak(0.05, 1.0, 0.1, 1e-3)).unwrap();
    assert!(est.nbar > 1.0);
}

#[test]
fn ratio_estimator_edge_cases() {
    assert!(matches!(ratio_nbar(0.3, 0.3, 100), Err(Error::RatioDivergence { .. })));
    assert!(matches!(ratio_nbar(0.5, 0.2, 100), Err(Error::RatioDivergence { .. })));
    assert!(ratio_nbar(-0.1, 0.2, 100).is_err());
    assert!(ratio_nbar(0.1, 1.2, 100).is_err());
    let e = ratio_nbar(0.0, 0.4, 100).unwrap();
    assert_eq!(e.nbar, 0.0);
    assert_eq!(ratio_nbar(0.1, 0.4, 0).unwrap().stderr, 0.0);
}

#[test]
fn ratio_error_propagation_matches_finite_differences() {
    let (a, b, shots) = (0.12, 0.35, 400);
    let est = ratio_nbar(a, b, shots).unwrap();
    let f = |a: f64, b: f64| (a / b) / (1.0 - a / b);
    let h = 1e-7;
    let da = (f(a + h, b) - f(a - h, b)) / (2.0 * h);
    let db = (f(a, b + h) - f(a, b - h)) / (2.0 * h);
    let s = shots as f64;
    let want = (da * da * a * (1.0 - a) / s + db * db * b * (1.0 - b) / s).sqrt();
    assert!((est.stderr - want).abs() < 1e-6 * want);
}

#[test]
fn detection_reads_dark_without_shelving_and_bright_after_a_carrier_pi() {
    let e = engine(10);
    let st = e.prepare(Backend::Rate, &[S::S_PLUS, S::D_MINUS], &FockInit::Fock(0)).unwrap();
    let before = st.clone();
    let far = PulseSpec::quadrupole(0, S::ONE, S::D_ZERO, 1e3, 5e6, 1e-3);
    let dark = simulate_shelving_detection(&e, &st, &far, 20e-6).unwrap();
    assert!(dark.iter().all(|p| p.value < 1e-6), "{dark:?}");
    let pi = PulseSpec::quadrupole(0, S::ONE, S::D_ZERO, 1.0 / (2.0 * 10e-6), 0.0, 10e-6);
    let bright = simulate_shelving_detection(&e, &st, &pi, 20e-6).unwrap();
    assert!(bright[0].value > 0.99);
    assert!(bright[1].value < 1e-6);
    assert_eq!(st.populations(0), before.populations(0));
    assert_eq!(st.populations(1), before.populations(1));
}

#[test]
fn detection_rejects_non_shelving_probes() {
    let e = engine(10);
    let st = e.prepare(Backend::Rate, &[S::ZERO, S::ZERO], &FockInit::Fock(0)).unwrap();
    assert!(simulate_shelving_detection(&e, &st, &PulseSpec::mw_pi(20e-6), 20e-6).is_err());
    let wrong = PulseSpec::quadrupole(0, S::D_MINUS, S::D_PLUS, 1e3, 0.0, 1e-3);
    assert!(simulate_shelving_detection(&e, &st, &wrong, 20e-6).is_err());
    let probe = PulseSpec::quadrupole(0, S::ONE, S::D_ZERO, 1e3, 0.0, 1e-3);
    assert!(scan_spectrum(&e, &st, &[f64::NAN], &probe, 20e-6, 100).is_err());
}

#[test]
fn scan_follows_the_carrier_lineshape() {
    let e = engine(10);
    let st = e.prepare(Backend::Rate, &[S::ZERO, S::ZERO], &FockInit::Fock(0)).unwrap();
    let (rabi, t) = (1.0 / (2.0 * 100e-6), 100e-6);
    let probe = PulseSpec::quadrupole(0, S::ONE, S::D_ZERO, rabi, 0.0, t);
    let offsets = [0.0, 2e3, 5e3, 8.66e3, 20e3];
    let res = scan_spectrum(&e, &st, &offsets, &probe, 20e-6, 100).unwrap();
    for (r, &d) in res.iter().zip(&offsets) {
        assert_eq!(r.frequency_offset_hz, d);
        // The Lamb-Dicke carrier reduction from n = 0 is 1 − η²/2.
        let want = rabi_probability(rabi * (1.0 - 0.05f64.powi(2) / 2.0), d, t);
        assert!((r.shelve_probability[0] - want).abs() < 2e-3, "{d}: {} vs {want}", r.shelve_probability[0]);
        assert!(r.stderr[0] <= 0.05 + 1e-12);
    }
}

#[test]
fn chain_spectrum_resolves_every_radial_mode() {
    let modes = ChainModes::compute(&TrapConfig::default()).unwrap();
    let t = 1e-3;
    let rabi = 1.0 / (2.0 * t * modes.radial.lamb_dicke[0][0].abs());
    let radial = &modes.radial.frequencies_hz;
    for (m, &f) in radial.iter().enumerate() {
        let window: Vec<f64> = (-100..=100).map(|k| f + f64::from(k) * 100.0).collect();
        let spec = chain_spectrum(&modes, 0, &[0.0; 5], &[0.0; 5], rabi, t, &window).unwrap();
        let (at, peak) = spec.iter().copied().fold((0.0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        assert!((at - f).abs() <= 100.0, "mode {m}: peak at {at}, expected {f}");
        assert!(peak > 0.05, "mode {m}: height {peak}");
    }
    // COM has the highest radial frequency, so its blue sideband sits rightmost.
    assert!(radial.iter().all(|&f| f <= radial[0]));
    // From the ground state every red sideband is empty.
    let red: Vec<f64> = radial.iter().map(|f| -f).collect();
    let spec = chain_spectrum(&modes, 0, &[0.0; 5], &[0.0; 5], rabi, t, &red).unwrap();
    assert!(spec.iter().all(|p| p.1 < 1e-3), "{spec:?}");
}

#[test]
fn chain_spectrum_validates_inputs() {
    let modes = ChainModes::compute(&TrapConfig::default()).unwrap();
    assert!(chain_spectrum(&modes, 5, &[0.0; 5], &[0.0; 5], 1e3, 1e-4, &[0.0]).is_err());
    assert!(chain_spectrum(&modes, 0, &[0.0; 4], &[0.0; 5], 1e3, 1e-4, &[0.0]).is_err());
}

#[test]
fn thermal_pi_time_limits() {
    let t0 = thermal_pi_time(1e5, 0.05, 0.8, 0.0);
    assert!((t0 - 1.0 / (2.0 * 1e5 * 0.05 * 0.8)).abs() < 1e-15);
    let ts: Vec<f64> = [0.0, 0.5, 2.0, 10.0].iter().map(|&n| thermal_pi_time(1e5, 0.05, 0.8, n)).collect();
    assert!(ts.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn weak_probe_is_the_requested_fraction_of_a_pi() {
    let p = SidebandProbe::weak(-0.04, 0.7, 0.1, 2e-3);
    assert!((2.0 * p.rabi_hz * 0.04 * 0.7 * p.duration_s - 0.1).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ratio_inverts_the_thermal_ratio(nbar in 0.0..20.0f64, p_bsb in 0.05..1.0f64) {
        let p_rsb = p_bsb * nbar / (nbar + 1.0);
        let est = ratio_nbar(p_rsb, p_bsb, 100).unwrap();
        prop_assert!((est.nbar - nbar).abs() < 1e-9 * (1.0 + nbar * nbar));
        prop_assert!(est.stderr >= 0.0);
    }
}
