use gfsb_core::noise::{replica_seed, sample_y, NoiseConfig};
use gfsb_core::solver::{
    energy_history, gronwall_envelope, mittag_leffler, mittag_leffler_inverse, smooth_initial_condition,
    solve_deterministic, SolverOptions,
};
use gfsb_core::spectral::Grid;
use proptest::prelude::*;

/// `E_{1/2}(0.7) = e^{0.49} erfc(-0.7)`, evaluated once in extended precision.
const E_HALF_OF_0_7: f64 = 2.7387021025613168;

#[test]
fn mittag_leffler_reference_values() {
    assert!((mittag_leffler(1.0, 1.0).unwrap() - std::f64::consts::E).abs() < 1e-12);
    assert!((mittag_leffler(0.5, 0.7).unwrap() - E_HALF_OF_0_7).abs() < 1e-12);
    assert_eq!(mittag_leffler(0.4, 0.0).unwrap(), 1.0);
    assert!(mittag_leffler(0.0, 1.0).is_err());
}

proptest! {
    #[test]
    fn mittag_leffler_special_orders(x in 0.0f64..6.0) {
        // E_1(x) = e^x and E_2(x) = cosh(sqrt x)
        let e1 = mittag_leffler(1.0, x).unwrap();
        prop_assert!((e1 - x.exp()).abs() <= 1e-13 * x.exp());
        let e2 = mittag_leffler(2.0, x).unwrap();
        prop_assert!((e2 - x.sqrt().cosh()).abs() <= 1e-13 * e2);
    }

    #[test]
    fn mittag_leffler_inverse_round_trips(a in 0.3f64..1.0, z in 0.01f64..5.0) {
        let v = mittag_leffler(a, z).unwrap();
        let back = mittag_leffler_inverse(a, v).unwrap();
        prop_assert!((back - z).abs() < 1e-8 * (1.0 + z));
    }

    #[test]
    fn envelope_grows_with_m_and_t(m in 0.0f64..5.0, t in 0.0f64..1.0) {
        let a = 1.0 - 1.0 / 1.75;
        let e = gronwall_envelope(2.0, m, a, t).unwrap();
        prop_assert!(e >= 2.0);
        prop_assert!(gronwall_envelope(2.0, m + 1.0, a, t + 0.1).unwrap() >= e);
    }
}

#[test]
fn replica_seeds_are_distinct() {
    let mut s: Vec<u64> = (0..10_000).map(|i| replica_seed(7, i)).collect();
    s.sort_unstable();
    s.dedup();
    assert_eq!(s.len(), 10_000);
}

#[test]
fn sampling_is_reproducible_per_seed() {
    let g = Grid::new(16, 1.75).unwrap();
    let cfg = NoiseConfig::new(1.75, 0.0625, 5, 1e-3, 0.05);
    let a = sample_y(&cfg, g).unwrap();
    let b = sample_y(&cfg, g).unwrap();
    let c = sample_y(&cfg.clone().with_seed(6), g).unwrap();
    assert_eq!(a, b);
    assert!(a.last().max_abs_diff(c.last()) > 0.0);
}

#[test]
fn calibration_fixes_the_first_mode_variance() {
    let g = Grid::new(16, 1.6).unwrap();
    let cfg = NoiseConfig::new(1.6, 0.0625, 0, 1e-3, 0.1).calibrated();
    assert!((cfg.stationary_variance(g, 1) - 0.5).abs() < 1e-14);
}

#[test]
fn unresolved_mollifier_is_rejected() {
    let g = Grid::new(8, 1.75).unwrap();
    assert!(NoiseConfig::new(1.75, 0.0625, 0, 1e-3, 0.1).validate(g).is_err());
    assert!(NoiseConfig::new(1.75, 0.125, 0, 1e-3, 0.1).validate(g).is_ok());
}

#[test]
fn deterministic_energy_never_increases() {
    let g = Grid::new(32, 1.75).unwrap();
    let u0 = smooth_initial_condition(g, 2.0);
    let d = solve_deterministic(&u0, 1e-3, 0.2, &SolverOptions::default()).unwrap();
    let e = energy_history(&d.u);
    assert!(e.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    assert!(d.diagnostics.max_audit < 1e-12);
}
