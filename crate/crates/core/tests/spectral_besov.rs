use gfsb_core::besov::{bony_decompose, paraproduct, resonant, DyadicPartition};
use gfsb_core::spectral::{
    apply_derivative, pointwise_product, semigroup, sup_norm, FourierField, Grid, Mollifier,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn field_strategy(n: usize) -> impl Strategy<Value = FourierField> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_map(move |v| {
        let g = Grid::new(n, 1.75).unwrap();
        FourierField::from_coeffs(g, v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap()
    })
}

/// Direct convolution over signed modes, truncated to `1..=N`.
fn convolution(f: &FourierField, g: &FourierField) -> Vec<Complex64> {
    let n = f.grid().n_modes() as i64;
    (1..=n)
        .map(|k| {
            let mut s = Complex64::new(0.0, 0.0);
            for j in -n..=n {
                s += f.get(j) * g.get(k - j);
            }
            s
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn product_matches_convolution(f in field_strategy(12), g in field_strategy(12)) {
        let p = pointwise_product(&f, &g).unwrap();
        for (a, b) in p.coeffs().iter().zip(convolution(&f, &g)) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn bony_pieces_sum_to_product(f in field_strategy(32), g in field_strategy(32)) {
        let p = DyadicPartition::new(f.grid());
        let parts = bony_decompose(&f, &g, &p).unwrap();
        let sum = &(&parts.para + &parts.reso) + &parts.anti;
        prop_assert!(pointwise_product(&f, &g).unwrap().max_abs_diff(&sum) < 1e-12);
        // f ≻ g is g ≺ f
        prop_assert!(parts.anti.max_abs_diff(&paraproduct(&g, &f, &p).unwrap()) < 1e-12);
        prop_assert!(parts.reso.max_abs_diff(&resonant(&g, &f, &p).unwrap()) < 1e-12);
    }

    #[test]
    fn blocks_partition_unity(f in field_strategy(64)) {
        let p = DyadicPartition::new(f.grid());
        let mut acc = FourierField::zeros(f.grid());
        for b in p.blocks(&f) {
            acc.add_assign_scaled(1.0, &b);
        }
        prop_assert!(acc.max_abs_diff(&f) < 1e-13);
        for k in 1..=64 {
            let w: f64 = (-1..=p.top()).map(|j| p.weight(j, k)).sum();
            prop_assert!((w - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn paraproduct_is_bilinear(f in field_strategy(16), g in field_strategy(16), h in field_strategy(16), a in -2.0f64..2.0) {
        let p = DyadicPartition::new(f.grid());
        let lhs = paraproduct(&(&f + &h.scale(a)), &g, &p).unwrap();
        let rhs = paraproduct(&f, &g, &p).unwrap().axpy(a, &paraproduct(&h, &g, &p).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn semigroup_composes(f in field_strategy(16), s in 0.0f64..0.3, t in 0.0f64..0.3) {
        let a = semigroup(&semigroup(&f, s, 1.6).unwrap(), t, 1.6).unwrap();
        let b = semigroup(&f, s + t, 1.6).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn derivative_of_square_has_zero_mean_against_u(f in field_strategy(16)) {
        // int u D(u^2) = 0 for real u
        let d = apply_derivative(&pointwise_product(&f, &f).unwrap());
        let ip: f64 = (1..=16i64).map(|k| 2.0 * (f.get(k).conj() * d.get(k)).re).sum();
        prop_assert!(ip.abs() < 1e-11 * (1.0 + f.energy().powf(1.5)));
    }

    #[test]
    fn sup_norm_dominates_point_values(f in field_strategy(8), x in 0.0f64..std::f64::consts::TAU) {
        prop_assert!(f.eval(x).abs() <= sup_norm(&f) * (1.0 + 1e-3) + 1e-12);
    }
}

#[test]
fn cosine_squared_identity() {
    let g = Grid::new(8, 1.75).unwrap();
    let c = FourierField::cosine(g, 3);
    // cos^2(3x) = 1/2 + cos(6x)/2, mean dropped
    let p = pointwise_product(&c, &c).unwrap();
    let want = FourierField::cosine(g, 6).scale(0.5);
    assert!(p.max_abs_diff(&want) < 1e-15);
}

#[test]
fn mollifier_is_one_at_origin_and_vanishes_outside() {
    let m = Mollifier::new(0.125);
    assert_eq!(m.factor(0.0), 1.0);
    assert_eq!(m.factor(8.0), 0.0);
    assert!(m.factor(4.0) > 0.0 && m.factor(4.0) < 1.0);
    assert!(m.resolved_by(8));
    assert!(!m.resolved_by(6));
}
