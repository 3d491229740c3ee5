//! Exponential-integrator Duhamel recursion `F' = -|k|^gamma F + g`.

use crate::spectral::{FourierField, Grid};
use crate::trajectory::Trajectory;

use super::TreeError;

/// Tolerance used when "from minus infinity" is realized by a burn-in window.
pub const DEFAULT_BURN_IN_TOL: f64 = 1e-3;

/// Burn-in after which a zero start has forgotten its initial value to
/// relative accuracy `tol`: `max(1, 1/|kappa_1|^gamma) ln(1/tol)`.
pub fn burn_in_length(tol: f64, grid: Grid, gamma: f64) -> f64 {
    let slowest = grid.wavenumber(1).powf(gamma);
    (1.0f64).max(1.0 / slowest) * (1.0 / tol).ln()
}

/// Per-mode coefficients of one step of length `h` with the forcing
/// interpolated linearly between the nodes:
/// `F_{n+1} = decay F_n + w0 g_n + w1 g_{n+1}`.
#[derive(Debug, Clone)]
pub struct EtdWeights {
    pub decay: Vec<f64>,
    pub w0: Vec<f64>,
    pub w1: Vec<f64>,
}

impl EtdWeights {
    pub fn new(grid: Grid, gamma: f64, h: f64) -> Self {
        let n = grid.n_modes();
        let mut decay = Vec::with_capacity(n);
        let mut w0 = Vec::with_capacity(n);
        let mut w1 = Vec::with_capacity(n);
        for k in 1..=n {
            let a = grid.wavenumber(k).powf(gamma);
            let (d, x0, x1) = etd_coefficients(a, h);
            decay.push(d);
            w0.push(x0);
            w1.push(x1);
        }
        Self { decay, w0, w1 }
    }

    /// One step applied to all modes.
    pub fn step(&self, f: &FourierField, g0: &FourierField, g1: &FourierField) -> FourierField {
        let mut out = f.clone();
        let (a, b) = (g0.coeffs(), g1.coeffs());
        for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
            *c = *c * self.decay[i] + a[i] * self.w0[i] + b[i] * self.w1[i];
        }
        out
    }
}

/// `(e^{-ah}, w0, w1)` with `w0 + w1 = (1 - e^{-ah})/a`.
pub fn etd_coefficients(a: f64, h: f64) -> (f64, f64, f64) {
    let x = a * h;
    let decay = (-x).exp();
    // (x - 1 + e^{-x})/(a x) cancels for small x, so use its series there
    let total = -(-x).exp_m1() / a;
    let w1 = if x < 0.5 {
        // h sum_n (-x)^n / (n + 2)!
        let mut term = 0.5;
        let mut sum = 0.0;
        for n in 0..16 {
            sum += term;
            term *= -x / (n as f64 + 3.0);
        }
        h * sum
    } else {
        (x - 1.0 + decay) / (a * x)
    };
    (decay, total - w1, w1)
}

/// Integrates `g` from a zero value at the first node.
pub fn duhamel_from_first_node(forcing: &Trajectory, gamma: f64) -> Result<Trajectory, TreeError> {
    let dt = if forcing.len() > 1 { forcing.dt()? } else { 1.0 };
    let grid = forcing.grid();
    let w = EtdWeights::new(grid, gamma, dt);
    let mut out = Vec::with_capacity(forcing.len());
    out.push(FourierField::zeros(grid));
    for n in 0..forcing.len() - 1 {
        let next = w.step(&out[n], forcing.field(n), forcing.field(n + 1));
        out.push(next);
    }
    Ok(Trajectory::derived("duhamel", forcing, out))
}

/// `int P(t - s) g(s) ds`, either from the first node (zero initial value) or
/// from minus infinity, the latter realized by requiring at least
/// `burn_in_length` of forcing before `t = 0`.
pub fn duhamel_integrate(
    forcing: &Trajectory,
    gamma: f64,
    from_minus_infinity: bool,
) -> Result<Trajectory, TreeError> {
    if from_minus_infinity {
        let needed = burn_in_length(DEFAULT_BURN_IN_TOL, forcing.grid(), gamma);
        let have = -forcing.time(0);
        if have < needed * (1.0 - 1e-12) {
            return Err(TreeError::InsufficientBurnIn { needed, have });
        }
    }
    duhamel_from_first_node(forcing, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::TrajectoryMeta;
    use num_complex::Complex64;

    #[test]
    fn weights_series_matches_closed_form() {
        for &(a, h) in &[(1.0, 0.9e-3), (1.0, 1.1e-3), (300.0, 1e-3), (4.0, 0.25)] {
            let (d, w0, w1) = etd_coefficients(a, h);
            assert!((d - (-a * h as f64).exp()).abs() < 1e-15);
            let exact_total = -(-a * h as f64).exp_m1() / a;
            assert!((w0 + w1 - exact_total).abs() < 1e-14 * exact_total);
            // quadrature of the linear hat functions against the kernel
            let (x, w) = crate::quadrature::gauss_legendre_on(20, 0.0, h);
            let q1: f64 = x.iter().zip(&w).map(|(s, w)| w * (-a * (h - s)).exp() * s / h).sum();
            assert!((w1 - q1).abs() < 1e-13 * q1, "a={a} h={h}");
        }
    }

    #[test]
    fn constant_forcing_reaches_steady_state() {
        let g = Grid::new(4, 2.0).unwrap();
        let c = FourierField::from_coeffs(g, vec![Complex64::new(1.0, -2.0); 4]).unwrap();
        let dt = 0.01;
        let n = 1 + (burn_in_length(1e-3, g, 2.0) / dt).ceil() as usize + 200;
        let tr = Trajectory::uniform(-(n as f64 - 1.0) * dt, dt, vec![c.clone(); n], TrajectoryMeta::Derived("c".into()))
            .unwrap();
        let out = duhamel_integrate(&tr, 2.0, true).unwrap();
        for k in 1..=4usize {
            let want = c.get(k as i64) / (k as f64).powi(2);
            assert!((out.last().get(k as i64) - want).norm() < 1e-3 * want.norm());
        }
        let short = Trajectory::uniform(-1.0, dt, vec![c; 101], TrajectoryMeta::Derived("c".into())).unwrap();
        assert!(matches!(duhamel_integrate(&short, 2.0, true), Err(TreeError::InsufficientBurnIn { .. })));
        assert!(duhamel_integrate(&short, 2.0, false).unwrap().fields().iter().all(|f| !f.coeffs().iter().any(|z| z.is_nan())));
    }
}
