//! Closed-form covariance kernels of the quadratic tree.
//!
//! With unit-variance modes `E[Y_j(t) Y_{-j}(s)] = e^{-|j|^gamma |t-s|}`, the
//! building block `f_{k,j}(t) = int_{-inf}^t e^{-|k|^gamma (t-r)} Y_j(r) Y_{k-j}(r) dr`
//! has `E[f_{k,j}(t) f_{k',j'}(s)] = kernel_f(k, j, k', j', t, s)`.

use crate::noise::NoiseConfig;
use crate::spectral::Grid;

use super::TreeError;

/// `(1 - e^{-x}) / x`, continuous at 0.
fn e1(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// `int_{-inf}^t int_{-inf}^s e^{-a(t-r) - a(s-r') - b|r-r'|} dr' dr`
/// `= (a e^{-b D} - b e^{-a D}) / (a (a^2 - b^2))`, `D = |t - s|`.
pub fn b1_integral(a: f64, b: f64, delta: f64) -> Result<f64, TreeError> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(TreeError::DomainError(format!("rates must be positive, got a={a}, b={b}")));
    }
    let d = delta.abs();
    if (a - b).abs() < 1e-6 * (a + b) {
        return Ok(b1_near_equal(a, b, d));
    }
    Ok((a * (-b * d).exp() - b * (-a * d).exp()) / (a * (a * a - b * b)))
}

/// Same integral rewritten with `h = b - a` and `(1 - e^{-hD})/(hD)`, free of
/// the removable singularity at `a = b`.
fn b1_near_equal(a: f64, b: f64, d: f64) -> f64 {
    let h = b - a;
    (-a * d).exp() * (a * d * e1(h * d) + 1.0) / (a * (2.0 * a + h))
}

fn rate(k: i64, gamma: f64) -> f64 {
    (k.unsigned_abs() as f64).powf(gamma)
}

/// Number of Wick pairings linking `f_{k,j}` with `f_{k',j'}`.
fn multiplicity(k: i64, j: i64, k2: i64, j2: i64) -> u32 {
    if k2 != -k || j == 0 || j == k || j2 == 0 || j2 == k2 {
        return 0;
    }
    (j2 == j - k) as u32 + (j2 == -j) as u32
}

/// `E[f_{k,j}(t) f_{k',j'}(s)]` for unit-variance modes on the `2 pi` torus.
pub fn kernel_f(k: i64, j: i64, k2: i64, j2: i64, t: f64, s: f64, gamma: f64) -> Result<f64, TreeError> {
    if k == 0 {
        return Err(TreeError::ZeroModeK);
    }
    let m = multiplicity(k, j, k2, j2);
    if m == 0 {
        return Ok(0.0);
    }
    let a = rate(k, gamma);
    let b = rate(j, gamma) + rate(k - j, gamma);
    Ok(m as f64 * b1_integral(a, b, t - s)?)
}

/// `F(t,t) + F(s,s) - F(t,s) - F(s,t)`, the second moment of the increment.
pub fn kernel_fhat(k: i64, j: i64, k2: i64, j2: i64, t: f64, s: f64, gamma: f64) -> Result<f64, TreeError> {
    let f = |x, y| kernel_f(k, j, k2, j2, x, y, gamma);
    Ok(f(t, t)? + f(s, s)? - f(t, s)? - f(s, t)?)
}

/// `E[Y^lr_k(t) conj(Y^lr_k(s))]` for the grid-truncated tree driven by `config`:
/// `1/4 kappa_k^2 sum_{j,j'} sigma_j^2 sigma_{k-j}^2 F(k, j, -k, j'; t, s)`,
/// summed over `j != 0, k` with `|j|, |k - j| <= N`.
pub fn ylr_covariance(config: &NoiseConfig, grid: Grid, k: i64, t: f64, s: f64) -> Result<f64, TreeError> {
    if k == 0 {
        return Err(TreeError::ZeroModeK);
    }
    let n = grid.n_modes() as i64;
    let scale = grid.wavenumber(1);
    let kappa = scale * k as f64;
    let mut total = 0.0;
    for j in -n..=n {
        let l = k - j;
        if j == 0 || l == 0 || l.abs() > n {
            continue;
        }
        let var = config.stationary_variance(grid, j.unsigned_abs() as usize)
            * config.stationary_variance(grid, l.unsigned_abs() as usize);
        // both pairings j' = -j and j' = j - k give the same kernel
        let a = grid.rate(k.unsigned_abs() as usize);
        let b = grid.rate(j.unsigned_abs() as usize) + grid.rate(l.unsigned_abs() as usize);
        total += var * 2.0 * b1_integral(a, b, t - s)?;
    }
    Ok(0.25 * kappa * kappa * total)
}

/// `E|Y^lr_k|^2`.
pub fn ylr_second_moment(config: &NoiseConfig, grid: Grid, k: i64) -> Result<f64, TreeError> {
    ylr_covariance(config, grid, k, 0.0, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_time_value() {
        assert!((b1_integral(2.0, 1.0, 0.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        let want = (2.0 * (-0.3f64).exp() - (-0.6f64).exp()) / 6.0;
        assert!((b1_integral(2.0, 1.0, 0.3).unwrap() - want).abs() < 1e-15);
        assert!(b1_integral(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn degenerate_branch_is_continuous() {
        for &(a, d) in &[(2.0, 0.0), (2.0, 0.4), (37.0, 0.01), (5.0, 3.0)] {
            let lo = b1_integral(a, a * (1.0 - 1e-6), d).unwrap();
            let hi = b1_integral(a, a * (1.0 + 1e-6), d).unwrap();
            let mid = b1_integral(a, a, d).unwrap();
            assert!(((lo - hi) / mid).abs() < 1e-4);
            // limit: e^{-aD}(1 + aD)/(2a^2)
            let lim = (-a * d).exp() * (1.0 + a * d) / (2.0 * a * a);
            assert!(((mid - lim) / lim).abs() < 1e-12);
            // both branches agree at the switch
            let b = a * (1.0 + 2.01e-6);
            let outside = b1_integral(a, b, d).unwrap();
            assert!(((b1_near_equal(a, b, d) - outside) / mid).abs() < 1e-9);
        }
    }

    #[test]
    fn kernel_selection_and_fhat() {
        assert!(matches!(kernel_f(0, 1, 0, 1, 0.0, 0.0, 2.0), Err(TreeError::ZeroModeK)));
        assert_eq!(kernel_f(3, 1, 3, -1, 0.0, 0.0, 2.0).unwrap(), 0.0);
        assert_eq!(kernel_f(3, 0, -3, 0, 0.0, 0.0, 2.0).unwrap(), 0.0);
        // k = 3, j = 1: a = 9, b = 1 + 4
        let v = kernel_f(3, 1, -3, -1, 0.0, 0.0, 2.0).unwrap();
        assert!((v - 1.0 / (9.0 * 14.0)).abs() < 1e-15);
        assert_eq!(kernel_f(3, 1, -3, -2, 0.0, 0.0, 2.0).unwrap(), v);
        // 2j = k: both pairings coincide
        assert!((kernel_f(2, 1, -2, -1, 0.0, 0.0, 2.0).unwrap() - 2.0 / (4.0 * 6.0)).abs() < 1e-15);
        assert_eq!(kernel_fhat(3, 1, -3, -1, 0.7, 0.7, 1.6).unwrap(), 0.0);
        assert!(kernel_fhat(3, 1, -3, -1, 0.7, 0.2, 1.6).unwrap() > 0.0);
    }
}
