//! Wick pairing enumeration for centred jointly Gaussian Fourier modes of `Y`.

use serde::Serialize;

use crate::noise::NoiseConfig;
use crate::spectral::Grid;

use super::TreeError;

pub type Matching = Vec<(usize, usize)>;

/// All perfect matchings of `0..n` (`n` even), `(n-1)!!` of them.
pub fn perfect_matchings(n: usize) -> Vec<Matching> {
    fn rec(rest: &[usize], acc: &mut Matching, out: &mut Vec<Matching>) {
        if rest.is_empty() {
            out.push(acc.clone());
            return;
        }
        let a = rest[0];
        for i in 1..rest.len() {
            let b = rest[i];
            let remaining: Vec<usize> = rest[1..].iter().copied().filter(|&x| x != b).collect();
            acc.push((a, b));
            rec(&remaining, acc, out);
            acc.pop();
        }
    }
    if n % 2 == 1 {
        return Vec::new();
    }
    let idx: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    rec(&idx, &mut Vec::new(), &mut out);
    out
}

/// `sum over matchings of prod cov(i, j)`.
pub fn wick_sum(n: usize, cov: impl Fn(usize, usize) -> f64) -> f64 {
    perfect_matchings(n)
        .iter()
        .map(|m| m.iter().map(|&(i, j)| cov(i, j)).product::<f64>())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WickValue {
    pub value: f64,
    /// Set for an odd number of factors; the value is then 0.
    pub odd: bool,
    /// Matchings with a nonzero product.
    pub contributing: usize,
}

/// `E[Y_k(t) Y_{k'}(t')]` for the stationary OU modes of `config`.
pub fn y_pair_covariance(config: &NoiseConfig, grid: Grid, a: (i64, f64), b: (i64, f64)) -> f64 {
    let (k, t) = a;
    let (k2, s) = b;
    if k == 0 || k + k2 != 0 || k.unsigned_abs() as usize > grid.n_modes() {
        return 0.0;
    }
    let m = k.unsigned_abs() as usize;
    config.stationary_variance(grid, m) * (-grid.rate(m) * (t - s).abs()).exp()
}

/// `E[prod_i Y_{k_i}(t_i)]` by exact enumeration of pairings.
pub fn wick_expectation(factors: &[(i64, f64)], config: &NoiseConfig, grid: Grid) -> WickValue {
    if factors.len() % 2 == 1 {
        return WickValue { value: 0.0, odd: true, contributing: 0 };
    }
    let cov = |i: usize, j: usize| y_pair_covariance(config, grid, factors[i], factors[j]);
    let mut value = 0.0;
    let mut contributing = 0;
    for m in perfect_matchings(factors.len()) {
        let p: f64 = m.iter().map(|&(i, j)| cov(i, j)).product();
        if p != 0.0 {
            contributing += 1;
        }
        value += p;
    }
    WickValue { value, odd: false, contributing }
}

/// Strict version of [`wick_expectation`].
pub fn wick_expectation_checked(factors: &[(i64, f64)], config: &NoiseConfig, grid: Grid) -> Result<f64, TreeError> {
    let w = wick_expectation(factors, config, grid);
    if w.odd {
        Err(TreeError::OddMomentCount)
    } else {
        Ok(w.value)
    }
}

/// Pairing classes of the six-point function `E[Y_k Y_l Y_m Y_k' Y_l' Y_m']`
/// where `(l, m)` and `(l', m')` enter through products `Y_l Y_m`, `Y_l' Y_m'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PairingClass {
    /// `k` paired with `k'`.
    P1,
    /// `k` paired with the other product's factor.
    P2,
    /// `k` paired with a factor of its own product.
    P3,
}

/// Positions in the six-point tuple.
pub const SIX_K: usize = 0;
pub const SIX_L: usize = 1;
pub const SIX_M: usize = 2;
pub const SIX_KP: usize = 3;
pub const SIX_LP: usize = 4;
pub const SIX_MP: usize = 5;

/// Matchings of the six points with no pair inside one product.
pub fn six_point_admissible() -> Vec<(PairingClass, Matching)> {
    perfect_matchings(6)
        .into_iter()
        .filter(|m| {
            !m.iter().any(|&(a, b)| {
                let p = (a.min(b), a.max(b));
                p == (SIX_L, SIX_M) || p == (SIX_LP, SIX_MP)
            })
        })
        .map(|m| {
            let partner = m
                .iter()
                .find_map(|&(a, b)| if a == SIX_K { Some(b) } else if b == SIX_K { Some(a) } else { None })
                .unwrap();
            let class = match partner {
                SIX_KP => PairingClass::P1,
                SIX_LP | SIX_MP => PairingClass::P2,
                _ => PairingClass::P3,
            };
            (class, m)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PairingTerm {
    pub class: PairingClass,
    pub matching: Matching,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairingReport {
    pub terms: Vec<PairingTerm>,
    /// Per-class sums, ordered P1, P2, P3.
    pub class_values: Vec<(PairingClass, f64)>,
    /// Sum over the admissible matchings.
    pub total: f64,
    /// Sum over all fifteen matchings.
    pub full_wick: f64,
}

/// Six-point decomposition `R = R(P1) + R(P2) + R(P3)` for the given modes and times.
pub fn six_point_report(
    modes: [i64; 6],
    times: [f64; 6],
    config: &NoiseConfig,
    grid: Grid,
) -> PairingReport {
    let cov = |i: usize, j: usize| y_pair_covariance(config, grid, (modes[i], times[i]), (modes[j], times[j]));
    let terms: Vec<PairingTerm> = six_point_admissible()
        .into_iter()
        .map(|(class, m)| {
            let value = m.iter().map(|&(i, j)| cov(i, j)).product();
            PairingTerm { class, matching: m, value }
        })
        .collect();
    let class_values = [PairingClass::P1, PairingClass::P2, PairingClass::P3]
        .iter()
        .map(|&c| (c, terms.iter().filter(|t| t.class == c).map(|t| t.value).sum()))
        .collect();
    let total = terms.iter().map(|t| t.value).sum();
    let factors: Vec<(i64, f64)> = modes.iter().zip(times).map(|(&k, t)| (k, t)).collect();
    PairingReport { terms, class_values, total, full_wick: wick_expectation(&factors, config, grid).value }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_counts() {
        assert_eq!(perfect_matchings(2).len(), 1);
        assert_eq!(perfect_matchings(4).len(), 3);
        assert_eq!(perfect_matchings(6).len(), 15);
        assert_eq!(perfect_matchings(8).len(), 105);
        assert!(perfect_matchings(3).is_empty());
        assert_eq!(wick_sum(4, |_, _| 1.0), 3.0);
        assert_eq!(wick_sum(6, |_, _| 1.0), 15.0);
    }

    #[test]
    fn six_point_classes() {
        let adm = six_point_admissible();
        assert_eq!(adm.len(), 10);
        let count = |c| adm.iter().filter(|(x, _)| *x == c).count();
        assert_eq!((count(PairingClass::P1), count(PairingClass::P2), count(PairingClass::P3)), (2, 4, 4));
        // the three representatives
        let has = |m: &[(usize, usize)]| adm.iter().any(|(_, x)| {
            m.iter().all(|p| x.contains(p) || x.contains(&(p.1, p.0)))
        });
        assert!(has(&[(SIX_K, SIX_KP), (SIX_L, SIX_LP), (SIX_M, SIX_MP)]));
        assert!(has(&[(SIX_K, SIX_LP), (SIX_KP, SIX_L), (SIX_M, SIX_MP)]));
        assert!(has(&[(SIX_K, SIX_L), (SIX_KP, SIX_LP), (SIX_M, SIX_MP)]));
    }

    #[test]
    fn mode_selection() {
        let g = Grid::new(8, 2.0).unwrap();
        let c = NoiseConfig::new(2.0, 1.0 / 8.0, 1, 1e-3, 1.0);
        let s1 = c.stationary_variance(g, 1);
        let s2 = c.stationary_variance(g, 2);
        let w = wick_expectation(&[(1, 0.0), (-1, 0.0), (2, 0.0), (-2, 0.0)], &c, g);
        assert_eq!(w.contributing, 1);
        assert!((w.value - s1 * s2).abs() < 1e-15);
        let w = wick_expectation(&[(1, 0.0), (-1, 0.0), (1, 0.0)], &c, g);
        assert!(w.odd && w.value == 0.0);
        let r = six_point_report([1, -1, 2, -1, 1, -2], [0.0, 0.1, 0.1, 0.3, 0.2, 0.2], &c, g);
        assert!((r.total - r.full_wick).abs() < 1e-15);
    }
}
