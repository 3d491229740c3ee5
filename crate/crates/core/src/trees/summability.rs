//! Partial-sum diagnostics for the lattice series that control the tree moments.

use serde::Serialize;

/// Smallest decay exponent `p` (in `d_K ~ K^{-p}`) accepted as convergent.
pub const MIN_DECAY_EXPONENT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SeriesId {
    /// `sum_{k != 0, a} 1/(|k - a|^exponent |k|^{1/2})`.
    ShiftedPair { a: i64, exponent: f64 },
    /// `sum_{k != 0} |k|^exponent`.
    Power { exponent: f64 },
    /// `sum_{k != 0} |k|^{4 - 10 gamma/3 + 2 a'}`.
    FirstCondition { gamma: f64, a_prime: f64 },
}

impl SeriesId {
    pub fn term(&self, k: i64) -> f64 {
        let ak = k.unsigned_abs() as f64;
        match *self {
            SeriesId::ShiftedPair { a, exponent } => {
                if k == 0 || k == a {
                    0.0
                } else {
                    1.0 / ((k - a).unsigned_abs() as f64).powf(exponent) / ak.sqrt()
                }
            }
            SeriesId::Power { exponent } => {
                if k == 0 {
                    0.0
                } else {
                    ak.powf(exponent)
                }
            }
            SeriesId::FirstCondition { .. } => {
                if k == 0 {
                    0.0
                } else {
                    ak.powf(self.power_exponent().unwrap())
                }
            }
        }
    }

    /// Exponent of a pure power series.
    pub fn power_exponent(&self) -> Option<f64> {
        match *self {
            SeriesId::Power { exponent } => Some(exponent),
            SeriesId::FirstCondition { gamma, a_prime } => Some(4.0 - 10.0 * gamma / 3.0 + 2.0 * a_prime),
            SeriesId::ShiftedPair { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Convergent,
    Divergent,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummabilityReport {
    pub series: SeriesId,
    pub cutoff: i64,
    /// Partial sums over `0 < |k| <= K/4, K/2, K`.
    pub partial: [f64; 3],
    /// `q = (S_K - S_{K/2}) / (S_{K/2} - S_{K/4})`.
    pub ratio: f64,
    /// `p = -log2 q`, the fitted decay of the dyadic increments.
    pub decay_exponent: f64,
    /// Geometric tail `d2 q / (1 - q)`; infinite when `q >= 1`.
    pub tail: f64,
    pub estimate: f64,
    /// `tail / estimate`.
    pub tail_fraction: f64,
    pub verdict: Verdict,
}

/// Partial sums over `0 < |k| <= n` for each `n` in `marks` (ascending).
pub fn partial_sums(series: &SeriesId, marks: &[i64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(marks.len());
    let mut acc = 0.0;
    let mut n = 0;
    for &mark in marks {
        while n < mark {
            n += 1;
            acc += series.term(n) + series.term(-n);
        }
        out.push(acc);
    }
    out
}

/// Dyadic Richardson-type extrapolation of the partial sums at `K/4, K/2, K`
/// (intended for `K >= 64`). The verdict is read off the fitted decay of the
/// dyadic increments: convergent when they shrink like `K^{-p}` with
/// `p > MIN_DECAY_EXPONENT`.
pub fn summability_check(series: SeriesId, cutoff: i64) -> SummabilityReport {
    let s = partial_sums(&series, &[cutoff / 4, cutoff / 2, cutoff]);
    let d1 = s[1] - s[0];
    let d2 = s[2] - s[1];
    let ratio = if d1 != 0.0 { d2 / d1 } else { 0.0 };
    let decay_exponent = if ratio > 0.0 { -ratio.log2() } else { f64::INFINITY };
    let tail = if ratio < 1.0 { d2 * ratio / (1.0 - ratio) } else { f64::INFINITY };
    let estimate = s[2] + tail;
    let verdict = if ratio < 1.0 && decay_exponent > MIN_DECAY_EXPONENT {
        Verdict::Convergent
    } else {
        Verdict::Divergent
    };
    SummabilityReport {
        series,
        cutoff,
        partial: [s[0], s[1], s[2]],
        ratio,
        decay_exponent,
        tail,
        estimate,
        tail_fraction: (tail / estimate).abs(),
        verdict,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformityReport {
    pub exponent: f64,
    pub cutoff: i64,
    pub a_values: Vec<i64>,
    pub sums: Vec<f64>,
    pub max: f64,
    pub min: f64,
    /// `max / min` across `a`.
    pub ratio: f64,
}

/// Partial sums at `K` of the shifted-pair series for each shift `a`.
pub fn shifted_pair_uniformity(a_values: &[i64], exponent: f64, cutoff: i64) -> UniformityReport {
    let sums: Vec<f64> = a_values
        .iter()
        .map(|&a| partial_sums(&SeriesId::ShiftedPair { a, exponent }, &[cutoff])[0])
        .collect();
    let max = sums.iter().cloned().fold(f64::MIN, f64::max);
    let min = sums.iter().cloned().fold(f64::MAX, f64::min);
    UniformityReport { exponent, cutoff, a_values: a_values.to_vec(), sums, max, min, ratio: max / min }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_series_verdicts() {
        let c = summability_check(SeriesId::FirstCondition { gamma: 1.6, a_prime: 0.05 }, 4096);
        assert!((c.series.power_exponent().unwrap() + 1.233333).abs() < 1e-5);
        assert_eq!(c.verdict, Verdict::Convergent);
        assert!((c.decay_exponent - 0.2333).abs() < 0.01);
        let d = summability_check(SeriesId::FirstCondition { gamma: 1.2, a_prime: 0.05 }, 4096);
        assert!((d.series.power_exponent().unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(d.verdict, Verdict::Divergent);
        // zeta(2) = pi^2/6, both signs
        let z = summability_check(SeriesId::Power { exponent: -2.0 }, 1024);
        assert!((z.estimate - std::f64::consts::PI.powi(2) / 3.0).abs() < 1e-5);
    }

    #[test]
    fn partial_sums_are_nested() {
        let s = partial_sums(&SeriesId::ShiftedPair { a: 3, exponent: 0.6 }, &[1, 4, 4, 16]);
        assert!(s[0] < s[1] && s[1] == s[2] && s[2] < s[3]);
        // terms at k = 0 and k = a are excluded
        assert_eq!(SeriesId::ShiftedPair { a: 3, exponent: 0.6 }.term(3), 0.0);
    }
}
