//! Physical-space transforms and the dealiased product.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{FourierField, SpectralError};

thread_local! {
    static PLANS: RefCell<Plans> = RefCell::new(Plans {
        planner: FftPlanner::new(),
        inverse: HashMap::new(),
        forward: HashMap::new(),
    });
}

struct Plans {
    planner: FftPlanner<f64>,
    inverse: HashMap<usize, Arc<dyn Fft<f64>>>,
    forward: HashMap<usize, Arc<dyn Fft<f64>>>,
}

fn plans(m: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANS.with(|p| {
        let mut p = p.borrow_mut();
        let Plans { planner, inverse, forward } = &mut *p;
        let inv = inverse.entry(m).or_insert_with(|| planner.plan_fft_inverse(m)).clone();
        let fwd = forward.entry(m).or_insert_with(|| planner.plan_fft_forward(m)).clone();
        (inv, fwd)
    })
}

/// Hermitian spectrum of `f` laid out on `m` points.
fn spread(f: &FourierField, m: usize, buf: &mut [Complex64]) {
    buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
    let n = f.coeffs.len().min((m - 1) / 2);
    for k in 1..=n {
        let c = f.coeffs[k - 1];
        buf[k] += c;
        buf[m - k] += c.conj();
    }
}

/// Samples of `f` at `x_j = j L / m`, `j = 0..m`. Requires `m > 2N`.
pub fn to_physical(f: &FourierField, m: usize) -> Vec<f64> {
    assert!(m > 2 * f.grid.n_modes, "physical grid too coarse");
    let (inv, _) = plans(m);
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    spread(f, m, &mut buf);
    inv.process(&mut buf);
    buf.into_iter().map(|z| z.re).collect()
}

/// Samples of two fields from a single complex transform.
pub fn physical_pair(f: &FourierField, g: &FourierField, m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m > 2 * f.grid.n_modes, "physical grid too coarse");
    let (inv, _) = plans(m);
    let mut a = vec![Complex64::new(0.0, 0.0); m];
    let mut b = vec![Complex64::new(0.0, 0.0); m];
    spread(f, m, &mut a);
    spread(g, m, &mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x += Complex64::new(-y.im, y.re);
    }
    inv.process(&mut a);
    (a.iter().map(|z| z.re).collect(), a.iter().map(|z| z.im).collect())
}

/// Raw forward coefficients `hat u(k)` for `k = 0..m` of real samples.
pub(crate) fn forward_raw(values: &[f64]) -> Vec<Complex64> {
    let m = values.len();
    let (_, fwd) = plans(m);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    let s = 1.0 / m as f64;
    buf.iter_mut().for_each(|z| *z *= s);
    buf
}

/// Projects real samples onto modes `1..=N` of `grid`.
pub fn from_physical(values: &[f64], grid: super::Grid) -> FourierField {
    let raw = forward_raw(values);
    let n = grid.n_modes;
    assert!(values.len() > 2 * n, "physical grid too coarse");
    FourierField { grid, coeffs: raw[1..=n].to_vec() }
}

#[derive(Debug, Clone)]
pub struct ProductReport {
    pub field: FourierField,
    /// Energy `sum |c_k|^2` (both signs) of the discarded modes `k = 0` and
    /// `N < |k| <= 2N`.
    pub discarded_energy: f64,
}

/// Dealiased product: exact on a `4N` grid, truncated back to `N` modes.
pub fn pointwise_product(f: &FourierField, g: &FourierField) -> Result<FourierField, SpectralError> {
    f.check_grid(g)?;
    let n = f.grid.n_modes;
    let m = 4 * n;
    let (a, b) = physical_pair(f, g, m);
    let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    let raw = forward_raw(&prod);
    Ok(FourierField { grid: f.grid, coeffs: raw[1..=n].to_vec() })
}

/// Dealiased product together with the energy removed by truncation.
pub fn pointwise_product_with_report(
    f: &FourierField,
    g: &FourierField,
) -> Result<ProductReport, SpectralError> {
    f.check_grid(g)?;
    let n = f.grid.n_modes;
    let m = 4 * n;
    let (a, b) = physical_pair(f, g, m);
    let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    let raw = forward_raw(&prod);
    // modes |k| < 2N are exact on the 4N grid; |k| = 2N folds onto the Nyquist
    // bin and comes from the single pair (N, N)
    let top = f.coeffs[n - 1] * g.coeffs[n - 1];
    let mut discarded = raw[0].norm_sqr() + 2.0 * top.norm_sqr();
    for c in &raw[n + 1..2 * n] {
        discarded += 2.0 * c.norm_sqr();
    }
    Ok(ProductReport {
        field: FourierField { grid: f.grid, coeffs: raw[1..=n].to_vec() },
        discarded_energy: discarded,
    })
}

/// `max |f|` on a grid oversampled 8x relative to the `2N` Nyquist grid.
pub fn sup_norm(f: &FourierField) -> f64 {
    let m = 16 * f.grid.n_modes;
    to_physical(f, m).into_iter().fold(0.0, |a, v| a.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::super::Grid;
    use super::*;

    fn random_field(grid: Grid, seed: u64) -> FourierField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..grid.n_modes())
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        FourierField::from_coeffs(grid, coeffs).unwrap()
    }

    #[test]
    fn physical_roundtrip() {
        let g = Grid::new(32, 2.0).unwrap();
        let f = random_field(g, 1);
        let v = to_physical(&f, 128);
        for (j, &x) in v.iter().enumerate().step_by(7) {
            assert!((x - f.eval(2.0 * std::f64::consts::PI * j as f64 / 128.0)).abs() < 1e-12);
        }
        assert!(from_physical(&v, g).max_abs_diff(&f) < 1e-14);
        let h = random_field(g, 2);
        let (a, b) = physical_pair(&f, &h, 128);
        let b2 = to_physical(&h, 128);
        assert!(a.iter().zip(&v).all(|(x, y)| (x - y).abs() < 1e-13));
        assert!(b.iter().zip(&b2).all(|(x, y)| (x - y).abs() < 1e-13));
    }

    #[test]
    fn product_to_sum() {
        let g = Grid::new(8, 2.0).unwrap();
        let p = pointwise_product(&FourierField::cosine(g, 1), &FourierField::cosine(g, 2)).unwrap();
        let want = &FourierField::cosine(g, 1).scale(0.5) + &FourierField::cosine(g, 3).scale(0.5);
        assert!(p.max_abs_diff(&want) < 1e-15);
        let s = FourierField::sine(g, 1);
        let r = pointwise_product_with_report(&s, &s).unwrap();
        assert!(r.field.max_abs_diff(&FourierField::cosine(g, 2).scale(-0.5)) < 1e-15);
        // sin^2 = 1/2 - cos(2x)/2: the mean 1/2 is dropped
        assert!((r.discarded_energy - 0.25).abs() < 1e-15);
    }

    #[test]
    fn product_matches_direct_convolution() {
        let g = Grid::new(24, 1.6).unwrap();
        let f = random_field(g, 3);
        let h = random_field(g, 4);
        let r = pointwise_product_with_report(&f, &h).unwrap();
        let n = 24i64;
        let mut discarded = 0.0;
        for k in -2 * n..=2 * n {
            let mut c = Complex64::new(0.0, 0.0);
            for j in -n..=n {
                c += f.get(j) * h.get(k - j);
            }
            if k >= 1 && k <= n {
                assert!((c - r.field.get(k)).norm() < 1e-13);
            } else if k == 0 || k.abs() > n {
                discarded += c.norm_sqr();
            }
        }
        assert!((discarded - r.discarded_energy).abs() < 1e-12);
    }

    #[test]
    fn sup_norm_of_cosine() {
        let g = Grid::new(16, 2.0).unwrap();
        assert!((sup_norm(&FourierField::cosine(g, 5)) - 1.0).abs() < 1e-12);
    }
}
