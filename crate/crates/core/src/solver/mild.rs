//! Re-integration of the mild formulation with a higher-order rule, used to
//! audit the time stepping.

use crate::spectral::{FourierField, Grid};
use crate::trajectory::Trajectory;

use super::SolverError;

/// `psi_m(x) = int_0^1 e^{-x(1-s)} s^m ds` for `m = 0, 1, 2`.
fn psi(x: f64) -> [f64; 3] {
    if x < 1.0 {
        // sum_k (-x)^k m! / (k + m + 1)!
        let mut out = [0.0; 3];
        for (m, o) in out.iter_mut().enumerate() {
            let fact_m = [1.0, 1.0, 2.0][m];
            let mut denom: f64 = (1..=m + 1).map(|i| i as f64).product();
            let mut pow = 1.0;
            let mut sum = 0.0;
            for k in 0..30 {
                sum += pow * fact_m / denom;
                pow *= -x;
                denom *= (k + m + 2) as f64;
            }
            *o = sum;
        }
        out
    } else {
        let p0 = -(-x).exp_m1() / x;
        let p1 = (1.0 - p0) / x;
        let p2 = (1.0 - 2.0 * p1) / x;
        [p0, p1, p2]
    }
}

/// Per-mode weights of `int_0^h e^{-a(h - s)} q(s) ds` for the quadratic `q`
/// through three equispaced nodes, on the first or the last interval.
struct QuadraticWeights {
    decay: Vec<f64>,
    /// Interval `[t_n, t_{n+1}]` with nodes `t_{n-1}, t_n, t_{n+1}`.
    back: Vec<[f64; 3]>,
    /// Interval `[t_0, t_1]` with nodes `t_0, t_1, t_2`.
    front: Vec<[f64; 3]>,
}

impl QuadraticWeights {
    fn new(grid: Grid, gamma: f64, h: f64) -> Self {
        let mut decay = Vec::new();
        let mut back = Vec::new();
        let mut front = Vec::new();
        for k in 1..=grid.n_modes() {
            let a = grid.wavenumber(k).powf(gamma);
            let x = a * h;
            let [m0, m1, m2] = psi(x);
            // moments of s/h on [0, 1]: int e^{-x(1-s)} s^m ds
            // back: nodes -1, 0, 1 in units of h
            let lb = [0.5 * (m2 - m1), m0 - m2, 0.5 * (m2 + m1)];
            // front: nodes 0, 1, 2
            let lf = [0.5 * (m2 - 3.0 * m1 + 2.0 * m0), -(m2 - 2.0 * m1), 0.5 * (m2 - m1)];
            decay.push((-x).exp());
            back.push(lb.map(|v| v * h));
            front.push(lf.map(|v| v * h));
        }
        Self { decay, back, front }
    }
}

/// `F(t_n) = int_0^{t_n} P(t_n - s) g(s) ds` with `g` interpolated quadratically.
pub fn reintegrate(forcing: &Trajectory, gamma: f64) -> Result<Vec<FourierField>, SolverError> {
    let n = forcing.len();
    let grid = forcing.grid();
    let mut out = vec![FourierField::zeros(grid); n];
    if n < 3 {
        return Err(SolverError::Precondition("re-integration needs at least three nodes".into()));
    }
    let h = forcing.dt()?;
    let w = QuadraticWeights::new(grid, gamma, h);
    for i in 0..n - 1 {
        let (idx, wts) = if i == 0 { ([0, 1, 2], &w.front) } else { ([i - 1, i, i + 1], &w.back) };
        let g = idx.map(|j| forcing.field(j).coeffs());
        let prev = out[i].coeffs().to_vec();
        let next = out[i + 1].coeffs_mut();
        for k in 0..grid.n_modes() {
            let ww = wts[k];
            next[k] = prev[k] * w.decay[k] + g[0][k] * ww[0] + g[1][k] * ww[1] + g[2][k] * ww[2];
        }
    }
    Ok(out)
}

/// `max_n ||w(t_n) - P(t_n) w(0) - int_0^{t_n} P(t_n - s) g(s) ds||_{L^2}`.
pub fn mild_residual(w: &Trajectory, forcing: &Trajectory, gamma: f64) -> Result<f64, SolverError> {
    if !w.same_times(forcing) {
        return Err(crate::trajectory::TrajectoryError::TimeGridMismatch.into());
    }
    let f = reintegrate(forcing, gamma)?;
    let t0 = w.time(0);
    let w0 = w.field(0);
    let grid = w.grid();
    let mut worst = 0.0f64;
    for (i, fi) in f.iter().enumerate() {
        let t = w.time(i) - t0;
        let free = w0.multiply(|k| (-t * grid.wavenumber(k).powf(gamma)).exp());
        let r = &(w.field(i) - &free) - fi;
        worst = worst.max(r.l2_norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::TrajectoryMeta;
    use num_complex::Complex64;

    #[test]
    fn psi_branches_agree() {
        for &x in &[0.999999, 1.000001] {
            let p = psi(x);
            let q = psi(if x < 1.0 { 1.0 + 1e-6 } else { 1.0 - 1e-6 });
            for m in 0..3 {
                assert!((p[m] - q[m]).abs() < 1e-5);
            }
        }
        let p = psi(0.0);
        assert!((p[0] - 1.0).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15 && (p[2] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_forcing_is_integrated_exactly() {
        let g = Grid::new(4, 2.0).unwrap();
        let h = 0.05;
        let n = 21;
        let q = |t: f64| 1.0 + 2.0 * t - 3.0 * t * t;
        let fields: Vec<FourierField> = (0..n)
            .map(|i| FourierField::mode(g, 2, Complex64::new(q(i as f64 * h), 0.0)))
            .collect();
        let tr = Trajectory::uniform(0.0, h, fields, TrajectoryMeta::Derived("q".into())).unwrap();
        let f = reintegrate(&tr, 2.0).unwrap();
        let t = (n - 1) as f64 * h;
        let (x, wq) = crate::quadrature::gauss_legendre_on(40, 0.0, t);
        let exact: f64 = x.iter().zip(&wq).map(|(s, w)| w * (-4.0 * (t - s)).exp() * q(*s)).sum();
        assert!((f[n - 1].get(2).re - exact).abs() < 1e-13);
    }
}
