//! Mittag-Leffler function and the Gronwall-type envelope built on it.

use serde::Serialize;
use statrs::function::gamma::{gamma, ln_gamma};

use super::SolverError;

/// Series terms are summed until the last one drops below this fraction of the sum.
const SERIES_TOL: f64 = 1e-16;
const MAX_TERMS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MittagLefflerEval {
    pub a: f64,
    pub z: f64,
    pub value: f64,
    pub terms: usize,
    /// Bound on the neglected tail from the ratio of the last two terms.
    pub tail_bound: f64,
}

/// `E_a(z) = sum_j z^j / Gamma(j a + 1)` for `z >= 0`.
///
/// Terms are formed in log space so that large `j` does not overflow. Once the
/// term ratio has dropped below one the tail is dominated by a geometric series
/// in the last ratio, which is what `tail_bound` reports.
pub fn mittag_leffler_eval(a: f64, z: f64) -> Result<MittagLefflerEval, SolverError> {
    if !(a > 0.0) {
        return Err(SolverError::NonpositiveOrder(a));
    }
    if z == 0.0 {
        return Ok(MittagLefflerEval { a, z, value: 1.0, terms: 1, tail_bound: 0.0 });
    }
    if z < 0.0 {
        return Err(SolverError::Precondition(format!("Mittag-Leffler argument must be >= 0, got {z}")));
    }
    let lz = z.ln();
    let log_term = |j: usize| j as f64 * lz - ln_gamma(j as f64 * a + 1.0);
    let mut sum = 0.0;
    let mut prev = f64::NEG_INFINITY;
    for j in 0..MAX_TERMS {
        let lt = log_term(j);
        let t = lt.exp();
        sum += t;
        let ratio = (lt - prev).exp();
        prev = lt;
        if j > 0 && ratio < 1.0 && t <= SERIES_TOL * sum {
            let tail_bound = t * ratio / (1.0 - ratio);
            return Ok(MittagLefflerEval { a, z, value: sum, terms: j + 1, tail_bound });
        }
    }
    Err(SolverError::Precondition(format!("Mittag-Leffler series did not converge for a = {a}, z = {z}")))
}

pub fn mittag_leffler(a: f64, z: f64) -> Result<f64, SolverError> {
    Ok(mittag_leffler_eval(a, z)?.value)
}

/// `f E_a(Gamma(a) M t^a)`.
pub fn gronwall_envelope(f_bound: f64, m: f64, a: f64, t: f64) -> Result<f64, SolverError> {
    if !(a > 0.0) {
        return Err(SolverError::NonpositiveOrder(a));
    }
    Ok(f_bound * mittag_leffler(a, gamma(a) * m * t.max(0.0).powf(a))?)
}

/// Smallest `z >= 0` with `E_a(z) >= target` (zero when `target <= 1`).
pub fn mittag_leffler_inverse(a: f64, target: f64) -> Result<f64, SolverError> {
    if target <= 1.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while mittag_leffler(a, hi)? < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mittag_leffler(a, mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert!((mittag_leffler(1.0, 1.0).unwrap() - std::f64::consts::E).abs() < 1e-12);
        assert!((mittag_leffler(2.0, 1.0).unwrap() - 1f64.cosh()).abs() < 1e-12);
        assert!((mittag_leffler(1.0, 30.0).unwrap() / 30f64.exp() - 1.0).abs() < 1e-12);
        assert_eq!(mittag_leffler(0.3, 0.0).unwrap(), 1.0);
        assert!(matches!(mittag_leffler(0.0, 1.0), Err(SolverError::NonpositiveOrder(_))));
        let e = mittag_leffler_eval(0.5, 2.0).unwrap();
        assert!(e.tail_bound < 1e-12 * e.value);
        // E_{1/2}(z) = e^{z^2} erfc(-z), evaluated at z = 0.7 in 30-digit arithmetic
        let exact = 2.738_702_102_561_316_8;
        assert!((mittag_leffler(0.5, 0.7).unwrap() - exact).abs() < 1e-14 * exact);
    }

    #[test]
    fn inverse_round_trip() {
        let z = mittag_leffler_inverse(0.4, 3.5).unwrap();
        assert!((mittag_leffler(0.4, z).unwrap() - 3.5).abs() < 1e-9);
        assert_eq!(gronwall_envelope(2.0, 5.0, 0.4, 0.0).unwrap(), 2.0);
    }
}
