//! Mean-zero real fields on the torus, stored as positive Fourier modes.
//!
//! Convention: `u(x) = sum_{k != 0} c_k e^{i kappa_k x}` with `c_{-k} = conj(c_k)`
//! and `kappa_k = 2 pi k / L`. Energies count both signs of `k`.

mod fft;
mod snapshot;

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fft::{
    from_physical, physical_pair, pointwise_product, pointwise_product_with_report, sup_norm,
    to_physical, ProductReport,
};
pub use snapshot::{read_snapshot, write_csv, write_snapshot, Snapshot};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("snapshot format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n_modes: usize,
    gamma: f64,
    domain_length: f64,
}

impl Grid {
    pub fn new(n_modes: usize, gamma: f64) -> Result<Self, SpectralError> {
        Self::with_length(n_modes, gamma, 2.0 * PI)
    }

    pub fn with_length(n_modes: usize, gamma: f64, domain_length: f64) -> Result<Self, SpectralError> {
        if n_modes < 2 {
            return Err(SpectralError::InvalidGrid(format!("need N >= 2, got {n_modes}")));
        }
        if !(gamma > 1.0 && gamma <= 2.0) {
            return Err(SpectralError::InvalidGrid(format!("gamma must lie in (1, 2], got {gamma}")));
        }
        if !(domain_length > 0.0) {
            return Err(SpectralError::InvalidGrid(format!("bad domain length {domain_length}")));
        }
        Ok(Self { n_modes, gamma, domain_length })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    /// Physical wavenumber of integer mode `k`.
    #[inline]
    pub fn wavenumber(&self, k: usize) -> f64 {
        k as f64 * (2.0 * PI / self.domain_length)
    }

    /// Decay rate `|kappa_k|^gamma` of mode `k` under the semigroup.
    #[inline]
    pub fn rate(&self, k: usize) -> f64 {
        self.wavenumber(k).powf(self.gamma)
    }

    pub fn rates(&self) -> Vec<f64> {
        (1..=self.n_modes).map(|k| self.rate(k)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl FourierField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.n_modes] }
    }

    /// `coeffs[i]` is the coefficient of mode `k = i + 1`.
    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.n_modes {
            return Err(SpectralError::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                grid.n_modes,
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    /// `amp * e^{i k x} + conj`.
    pub fn mode(grid: Grid, k: usize, amp: Complex64) -> Self {
        let mut f = Self::zeros(grid);
        f.set(k as i64, amp);
        f
    }

    /// `cos(k x)`.
    pub fn cosine(grid: Grid, k: usize) -> Self {
        Self::mode(grid, k, Complex64::new(0.5, 0.0))
    }

    /// `sin(k x)`.
    pub fn sine(grid: Grid, k: usize) -> Self {
        Self::mode(grid, k, Complex64::new(0.0, -0.5))
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of signed mode `k`; zero for `k = 0` or `|k| > N`.
    pub fn get(&self, k: i64) -> Complex64 {
        let a = k.unsigned_abs() as usize;
        if a == 0 || a > self.grid.n_modes {
            return Complex64::new(0.0, 0.0);
        }
        let c = self.coeffs[a - 1];
        if k > 0 {
            c
        } else {
            c.conj()
        }
    }

    /// Sets signed mode `k`; the mirror mode follows by symmetry.
    pub fn set(&mut self, k: i64, c: Complex64) {
        let a = k.unsigned_abs() as usize;
        assert!(a >= 1 && a <= self.grid.n_modes, "mode {k} outside the grid");
        self.coeffs[a - 1] = if k > 0 { c } else { c.conj() };
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// `sum_{k != 0} |c_k|^2`, i.e. the mean of `u^2` over the torus.
    pub fn energy(&self) -> f64 {
        2.0 * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.energy().sqrt()
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map_modes(|_, c| c * a)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self, SpectralError> {
        self.check_grid(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x + y * a).collect();
        Ok(Self { grid: self.grid, coeffs })
    }

    pub fn add_assign_scaled(&mut self, a: f64, other: &Self) {
        debug_assert_eq!(self.grid, other.grid);
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * a;
        }
    }

    /// Applies a real multiplier `m(k)` to every mode.
    pub fn multiply(&self, m: impl Fn(usize) -> f64) -> Self {
        self.map_modes(|k, c| c * m(k))
    }

    pub fn map_modes(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, &c)| f(i + 1, c)).collect();
        Self { grid: self.grid, coeffs }
    }

    pub fn check_grid(&self, other: &Self) -> Result<(), SpectralError> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(SpectralError::GridMismatch)
        }
    }

    /// Keeps only modes `k <= m`.
    pub fn truncate(&self, m: usize) -> Self {
        self.map_modes(|k, c| if k <= m { c } else { Complex64::new(0.0, 0.0) })
    }

    /// Value at physical point `x` by direct summation.
    pub fn eval(&self, x: f64) -> f64 {
        let mut s = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let ph = self.grid.wavenumber(i + 1) * x;
            s += 2.0 * (c.re * ph.cos() - c.im * ph.sin());
        }
        s
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Add for &FourierField {
    type Output = FourierField;
    fn add(self, rhs: &FourierField) -> FourierField {
        self.axpy(1.0, rhs).expect("grid mismatch in field addition")
    }
}

impl Sub for &FourierField {
    type Output = FourierField;
    fn sub(self, rhs: &FourierField) -> FourierField {
        self.axpy(-1.0, rhs).expect("grid mismatch in field subtraction")
    }
}

impl Neg for &FourierField {
    type Output = FourierField;
    fn neg(self) -> FourierField {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &FourierField {
    type Output = FourierField;
    fn mul(self, a: f64) -> FourierField {
        self.scale(a)
    }
}

/// `c_k -> -|kappa_k|^gamma c_k`.
pub fn apply_fractional_laplacian(f: &FourierField, gamma: f64) -> FourierField {
    let g = f.grid;
    f.multiply(|k| -g.wavenumber(k).powf(gamma))
}

/// `c_k -> |kappa_k|^beta c_k`.
pub fn apply_fractional_derivative(f: &FourierField, beta: f64) -> FourierField {
    let g = f.grid;
    f.multiply(|k| g.wavenumber(k).powf(beta))
}

/// `c_k -> i kappa_k c_k`.
pub fn apply_derivative(f: &FourierField) -> FourierField {
    let g = f.grid;
    f.map_modes(|k, c| Complex64::new(-c.im, c.re) * g.wavenumber(k))
}

/// `c_k -> e^{-t |kappa_k|^gamma} c_k`.
pub fn semigroup(f: &FourierField, t: f64, gamma: f64) -> Result<FourierField, SpectralError> {
    if t < 0.0 {
        return Err(SpectralError::NegativeTime(t));
    }
    let g = f.grid;
    Ok(f.multiply(|k| (-t * g.wavenumber(k).powf(gamma)).exp()))
}

/// Spatial mollifier profiles, all even, decreasing on `[0, inf)`, equal to 1
/// at the origin and supported in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum MollifierProfile {
    /// `exp(1 - 1/(1 - y^2))` on `|y| < 1`.
    #[default]
    Bump,
    /// Identically 1 on `|y| <= 1/2`, smooth decay to 0 at `|y| = 1`.
    FlatTop,
}

impl MollifierProfile {
    pub fn value(&self, y: f64) -> f64 {
        let y = y.abs();
        if y >= 1.0 {
            return 0.0;
        }
        match self {
            MollifierProfile::Bump => (1.0 - 1.0 / (1.0 - y * y)).exp(),
            MollifierProfile::FlatTop => {
                if y <= 0.5 {
                    1.0
                } else {
                    smooth_step_down(2.0 * (y - 0.5))
                }
            }
        }
    }

    pub fn support_radius(&self) -> f64 {
        1.0
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bump" => Some(Self::Bump),
            "flat-top" | "flattop" => Some(Self::FlatTop),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Bump => "bump",
            Self::FlatTop => "flat-top",
        }
    }
}

/// Smooth monotone step: 1 for `s <= 0`, 0 for `s >= 1`.
pub fn smooth_step_down(s: f64) -> f64 {
    fn h(x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            (-1.0 / x).exp()
        }
    }
    let a = h(1.0 - s);
    let b = h(s);
    a / (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    pub epsilon: f64,
    pub profile: MollifierProfile,
}

impl Mollifier {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon, profile: MollifierProfile::Bump }
    }

    pub fn with_profile(epsilon: f64, profile: MollifierProfile) -> Self {
        Self { epsilon, profile }
    }

    /// `phi(epsilon k)`.
    #[inline]
    pub fn factor(&self, k: f64) -> f64 {
        self.profile.value(self.epsilon * k)
    }

    /// Largest integer mode with a nonzero factor.
    pub fn max_active_mode(&self) -> usize {
        let r = self.profile.support_radius() / self.epsilon;
        let m = r.ceil() as usize;
        if m as f64 * self.epsilon >= self.profile.support_radius() {
            m.saturating_sub(1)
        } else {
            m
        }
    }

    /// Whether every mode with nonzero factor is carried by an `n_modes` grid.
    pub fn resolved_by(&self, n_modes: usize) -> bool {
        self.max_active_mode() <= n_modes
    }
}

/// `c_k -> phi(epsilon kappa_k) c_k`.
pub fn mollify(f: &FourierField, m: &Mollifier) -> FourierField {
    let g = f.grid;
    f.multiply(|k| m.factor(g.wavenumber(k)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(16, 2.0).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1, 2.0).is_err());
        assert!(Grid::new(8, 1.0).is_err());
        assert!(Grid::new(8, 2.1).is_err());
        assert!(Grid::new(8, 1.6).is_ok());
    }

    #[test]
    fn multipliers_on_pure_modes() {
        let g = grid();
        let one = Complex64::new(1.0, 0.0);
        let f1 = FourierField::mode(g, 1, one);
        assert_eq!(apply_fractional_laplacian(&f1, 2.0).get(1), -one);
        let f2 = FourierField::mode(g, 2, one);
        assert_eq!(apply_fractional_laplacian(&f2, 2.0).get(2), -one * 4.0);
        let f3 = FourierField::mode(g, 3, one);
        let v = apply_fractional_laplacian(&f3, 1.6).get(3).re;
        assert!((v + 3f64.powf(1.6)).abs() < 1e-12 && (v + 5.7995).abs() < 1e-4);
        let f4 = FourierField::mode(g, 4, one);
        assert_eq!(apply_fractional_derivative(&f4, 0.5).get(4), one * 2.0);
        assert_eq!(apply_fractional_derivative(&f4, 0.5).get(-4), one * 2.0);
        assert_eq!(apply_fractional_derivative(&f4, 0.0), f4);
    }

    #[test]
    fn derivative_of_cosine_is_minus_k_sine() {
        let g = grid();
        let d = apply_derivative(&FourierField::cosine(g, 3));
        let want = FourierField::sine(g, 3).scale(-3.0);
        assert!(d.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn semigroup_examples() {
        let g = grid();
        let f = FourierField::mode(g, 2, Complex64::new(1.0, 0.0));
        let p = semigroup(&f, 0.25, 2.0).unwrap();
        assert!((p.get(2).re - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(semigroup(&f, 0.0, 2.0).unwrap(), f);
        assert!(matches!(semigroup(&f, -1.0, 2.0), Err(SpectralError::NegativeTime(_))));
    }

    #[test]
    fn smoothing_bound() {
        // sup_t t^{d/g} |k|^d e^{-t |k|^g} = (d/(g e))^{d/g} for every k
        for &(d, gm) in &[(0.5, 2.0), (1.0, 1.6), (0.3, 1.75)] {
            let bound = (d / (gm * std::f64::consts::E)).powf(d / gm);
            for k in [1.0f64, 3.0, 17.0, 250.0] {
                let best = (0..4000)
                    .map(|i| {
                        let t = 1e-6 * 1.005f64.powi(i);
                        t.powf(d / gm) * k.powf(d) * (-t * k.powf(gm)).exp()
                    })
                    .fold(0.0, f64::max);
                assert!(best <= bound * (1.0 + 1e-12));
                assert!(best >= bound * 0.999);
            }
        }
    }

    #[test]
    fn mollifier_properties() {
        let g = grid();
        let f = FourierField::mode(g, 5, Complex64::new(1.0, 0.0));
        assert!(mollify(&f, &Mollifier::new(0.25)).is_zero());
        for k in [1.0, 2.0, 7.0] {
            let a = Mollifier::new(1e-6).factor(k);
            assert!((a - 1.0).abs() < 1e-10);
            for p in [MollifierProfile::Bump, MollifierProfile::FlatTop] {
                let small = Mollifier::with_profile(0.05, p).factor(k);
                let large = Mollifier::with_profile(0.1, p).factor(k);
                assert!(small >= large && (0.0..=1.0).contains(&large));
            }
        }
        assert_eq!(Mollifier::new(1.0 / 16.0).max_active_mode(), 15);
        assert_eq!(Mollifier::new(0.3).max_active_mode(), 3);
        assert!(Mollifier::new(1.0 / 16.0).resolved_by(15));
        assert!(!Mollifier::new(1.0 / 64.0).resolved_by(32));
    }

    #[test]
    fn eval_matches_definition() {
        let g = grid();
        let f = &FourierField::cosine(g, 2) + &FourierField::sine(g, 5);
        for x in [0.0, 0.3, 2.0] {
            assert!((f.eval(x) - ((2.0 * x).cos() + (5.0 * x).sin())).abs() < 1e-14);
        }
    }
}
