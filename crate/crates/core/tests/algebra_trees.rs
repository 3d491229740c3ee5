use gfsb_core::algebra::{
    generate_regular_subset, regular_set, regularity, verify_lemma_r_bound, RegularityParams, TreeSymbol,
};
use gfsb_core::noise::NoiseConfig;
use gfsb_core::spectral::Grid;
use gfsb_core::trees::{
    b1_integral, b1_quadrature, perfect_matchings, six_point_admissible, six_point_report, wick_expectation,
    y_pair_covariance, PairingClass,
};
use proptest::prelude::*;

/// Unordered binary trees by leaf count (Wedderburn–Etherington).
const WEDDERBURN_ETHERINGTON: [usize; 8] = [1, 1, 1, 2, 3, 6, 11, 23];

#[test]
fn enumeration_counts_unordered_binary_trees() {
    let all = generate_regular_subset(8);
    for (n, &want) in WEDDERBURN_ETHERINGTON.iter().enumerate() {
        assert_eq!(all.iter().filter(|s| s.leaves() == n + 1).count(), want, "{} leaves", n + 1);
    }
}

#[test]
fn hand_computed_regularities() {
    let p = RegularityParams::new(-0.2, 0.5).unwrap();
    let r = |s: &TreeSymbol| regularity(s, &p).unwrap();
    assert!((r(&TreeSymbol::n()) + 0.2).abs() < 1e-15);
    // min(-0.2, -0.2, -0.4) + 0.5
    assert!((r(&TreeSymbol::lr()) - 0.1).abs() < 1e-15);
    // min(-0.2, 0.1, -0.1) + 0.5
    assert!((r(&TreeSymbol::rllr()) - 0.3).abs() < 1e-15);
}

#[test]
fn generated_pair_set_at_reference_parameters() {
    let p = RegularityParams::new(-0.2, 0.5).unwrap();
    let set = regular_set(&[TreeSymbol::n(), TreeSymbol::lr(), TreeSymbol::rllr()], &p).unwrap();
    let mut pairs: Vec<(String, String)> = set.into_iter().map(|e| (e.left, e.right)).collect();
    pairs.sort();
    // r: n -0.2, lr 0.1, rLlr 0.3; every pair with positive sum
    let mut want: Vec<(String, String)> = [("n", "rLlr"), ("rLlr", "n"), ("lr", "lr"), ("lr", "rLlr"), ("rLlr", "lr"), ("rLlr", "rLlr")]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    want.sort();
    assert_eq!(pairs, want);
}

proptest! {
    #[test]
    fn product_bound_holds_on_admissible_parameters(alpha in -0.249f64..-0.01, extra in 0.01f64..0.5) {
        let b = -alpha + extra;
        let p = RegularityParams::new(alpha, b).unwrap();
        let rep = verify_lemma_r_bound(6, &p).unwrap();
        prop_assert!(rep.holds);
        prop_assert!(rep.min_r_products >= 2.0 * alpha + b - 1e-12);
        prop_assert!((rep.min_r_products - regularity(&TreeSymbol::lr(), &p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn product_is_commutative(i in 0usize..48, j in 0usize..48) {
        let all = generate_regular_subset(8);
        let (a, b) = (&all[i], &all[j]);
        let ab = TreeSymbol::product(a, b);
        prop_assert_eq!(ab.canonical_key(), TreeSymbol::product(b, a).canonical_key());
        prop_assert_eq!(ab.leaves(), a.leaves() + b.leaves());
        prop_assert_eq!(TreeSymbol::parse(&ab.name()).unwrap().canonical_key(), ab.canonical_key());
    }

    #[test]
    fn closed_form_matches_quadrature(a in 0.2f64..8.0, b in 0.2f64..8.0, d in 0.0f64..2.0) {
        prop_assume!((a - b).abs() > 1e-3);
        let c = b1_integral(a, b, d).unwrap();
        let q = b1_quadrature(a, b, d).unwrap();
        prop_assert!(((c - q) / q).abs() < 1e-8);
    }
}

#[test]
fn matching_counts_are_double_factorials() {
    assert_eq!(perfect_matchings(2).len(), 1);
    assert_eq!(perfect_matchings(4).len(), 3);
    assert_eq!(perfect_matchings(6).len(), 15);
    assert_eq!(perfect_matchings(8).len(), 105);
}

#[test]
fn admissible_six_point_pairings_split_two_four_four() {
    let adm = six_point_admissible();
    assert_eq!(adm.len(), 10);
    let count = |c: PairingClass| adm.iter().filter(|(k, _)| *k == c).count();
    assert_eq!((count(PairingClass::P1), count(PairingClass::P2), count(PairingClass::P3)), (2, 4, 4));
}

#[test]
fn four_point_moment_is_isserlis() {
    let g = Grid::new(8, 1.8).unwrap();
    let cfg = NoiseConfig::new(1.8, 0.125, 0, 0.01, 0.2);
    let f = [(1, 0.0), (-1, 0.05), (2, 0.1), (-2, 0.15)];
    let c = |a: (i64, f64), b: (i64, f64)| y_pair_covariance(&cfg, g, a, b);
    let by_hand = c(f[0], f[1]) * c(f[2], f[3]) + c(f[0], f[2]) * c(f[1], f[3]) + c(f[0], f[3]) * c(f[1], f[2]);
    let w = wick_expectation(&f, &cfg, g).value;
    assert!((w - by_hand).abs() < 1e-15);
    // only the (1,-1)(2,-2) pairing survives
    assert!((w - c(f[0], f[1]) * c(f[2], f[3])).abs() < 1e-15);
}

#[test]
fn six_point_classes_sum_to_the_full_pairing_sum() {
    let g = Grid::new(8, 1.75).unwrap();
    let cfg = NoiseConfig::new(1.75, 0.125, 0, 0.01, 0.2);
    for modes in [[1, -1, 2, -1, 1, -2], [1, 1, 2, -1, -1, -2], [2, 1, -3, -2, -1, 3]] {
        let r = six_point_report(modes, [0.1, 0.05, 0.05, 0.2, 0.15, 0.15], &cfg, g);
        assert!((r.total - r.full_wick).abs() <= 1e-14 * r.full_wick.abs().max(1e-300), "{modes:?}");
    }
}
