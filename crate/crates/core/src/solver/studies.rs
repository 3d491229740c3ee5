//! Stability and convergence studies built on the solvers: Lipschitz probes,
//! perturbation ladders with a fitted Mittag-Leffler envelope, and the
//! coupled-noise epsilon ladder.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma as gamma_fn;

use crate::algebra::{CoefficientMap, RegularityParams, TreeSymbol};
use crate::besov::{least_squares_slope, sobolev_norm, w_norm, DyadicPartition};
use crate::noise::{sample_y, NoiseConfig};
use crate::spectral::{FourierField, Grid};
use crate::trajectory::Trajectory;

use super::diagnostics::{gronwall_envelope, mittag_leffler_inverse};
use super::direct::solve_mollified_with;
use super::subcritical::{norm_s, solve_subcritical};
use super::{EnhancedData, SolverError, SolverOptions};

/// `amp (cos x + 1/2 sin 2x - 1/4 cos 3x)` in the `2 pi` normalization.
pub fn smooth_initial_condition(grid: Grid, amp: f64) -> FourierField {
    let mut f = FourierField::zeros(grid);
    f.set(1, Complex64::new(0.5 * amp, 0.0));
    f.set(2, Complex64::new(0.0, -0.25 * amp));
    f.set(3, Complex64::new(-0.125 * amp, 0.0));
    f
}

/// `sup_{r <= t_n} ||a(r) - b(r)||_{W^s}` for every node `n`.
pub fn running_sup_distance(a: &Trajectory, b: &Trajectory, s: f64) -> Result<Vec<f64>, SolverError> {
    if !a.same_times(b) {
        return Err(crate::trajectory::TrajectoryError::TimeGridMismatch.into());
    }
    let p = DyadicPartition::new(a.grid());
    let mut best = 0.0f64;
    Ok(a.fields()
        .iter()
        .zip(b.fields())
        .map(|(x, y)| {
            best = best.max(w_norm(&(x - y), s, &p));
            best
        })
        .collect())
}

/// `sup_t ||a(t) - b(t)||_{H^s}`.
pub fn sup_sobolev_distance(a: &Trajectory, b: &Trajectory, s: f64) -> Result<f64, SolverError> {
    if !a.same_times(b) {
        return Err(crate::trajectory::TrajectoryError::TimeGridMismatch.into());
    }
    Ok(a.fields().iter().zip(b.fields()).map(|(x, y)| sobolev_norm(&(x - y), s)).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize)]
pub struct DependenceReport {
    pub times: Vec<f64>,
    /// `sup_{r <= t} ||v1 - v2||_{W^s}`.
    pub difference: Vec<f64>,
    /// `||v1(T) - v2(T)||_{W^s}`.
    pub final_difference: f64,
    pub initial_difference: f64,
    pub data_difference: f64,
    /// `||Delta u0||_{W^s} + ||Delta X|| T^{delta/gamma}`.
    pub input: f64,
    /// `difference(T) / input`.
    pub ratio: f64,
}

/// Solves the subcritical remainder equation for both inputs and compares.
/// `delta` in the data weight is taken as `2 alpha + b`.
pub fn continuous_dependence_probe(
    x1: &EnhancedData,
    x2: &EnhancedData,
    u01: &FourierField,
    u02: &FourierField,
    c: &CoefficientMap,
    t_end: f64,
    opts: &SolverOptions,
) -> Result<DependenceReport, SolverError> {
    let (a, b) = rayon::join(
        || solve_subcritical(x1, c, u01, t_end, opts),
        || solve_subcritical(x2, c, u02, t_end, opts),
    );
    let (a, b) = (a?, b?);
    let s = norm_s(x1, opts);
    let p = DyadicPartition::new(x1.grid());
    let difference = running_sup_distance(&a.v, &b.v, s)?;
    let initial_difference = w_norm(&(u01 - u02), s, &p);
    let data_difference = x1.truncate(t_end).difference_norm(&x2.truncate(t_end))?;
    let params = x1.params();
    let delta = 2.0 * params.alpha + params.b;
    let input = initial_difference + data_difference * t_end.powf(delta / x1.gamma());
    let last = *difference.last().unwrap_or(&0.0);
    Ok(DependenceReport {
        times: a.v.times().to_vec(),
        final_difference: w_norm(&(a.v.last() - b.v.last()), s, &p),
        difference,
        initial_difference,
        data_difference,
        input,
        ratio: if input > 0.0 { last / input } else { 0.0 },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeFit {
    /// Order `a = 1 - 1/gamma`.
    pub a: f64,
    /// `C = g(0) / input`.
    pub c: f64,
    /// Smallest admissible `M` on the fitting rung, times `margin`.
    pub m: f64,
    pub margin: f64,
    /// Largest `difference / envelope` over all rungs and nodes.
    pub worst_ratio: f64,
    pub dominates: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderRung {
    pub h: f64,
    pub report: DependenceReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderReport {
    pub rungs: Vec<LadderRung>,
    /// Log-log slope of the difference at `T` against the input size.
    pub slope: f64,
    /// `max / min` of the rung ratios.
    pub ratio_spread: f64,
    pub envelope: EnvelopeFit,
}

/// Perturbs `u0` by `h * direction` for every `h` and fits a Gronwall envelope
/// on the smallest rung (the most linear one), then checks it on all rungs.
pub fn perturbation_ladder(
    x: &EnhancedData,
    c: &CoefficientMap,
    u0: &FourierField,
    direction: &FourierField,
    hs: &[f64],
    t_end: f64,
    opts: &SolverOptions,
) -> Result<LadderReport, SolverError> {
    let rungs = hs
        .par_iter()
        .map(|&h| {
            let u1 = u0 + &direction.scale(h);
            continuous_dependence_probe(x, x, &u1, u0, c, t_end, opts).map(|report| LadderRung { h, report })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let xs: Vec<f64> = rungs.iter().map(|r| r.report.input.ln()).collect();
    let ys: Vec<f64> = rungs.iter().map(|r| r.report.final_difference.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    let ratios: Vec<f64> = rungs.iter().map(|r| r.report.ratio).collect();
    let ratio_spread = ratios.iter().cloned().fold(f64::MIN, f64::max) / ratios.iter().cloned().fold(f64::MAX, f64::min);
    let fit_on = rungs
        .iter()
        .min_by(|a, b| a.h.abs().partial_cmp(&b.h.abs()).unwrap())
        .ok_or_else(|| SolverError::Precondition("empty perturbation ladder".into()))?;
    let envelope = fit_envelope(&rungs, fit_on, x.gamma(), 1.25)?;
    Ok(LadderReport { rungs, slope, ratio_spread, envelope })
}

fn fit_envelope(rungs: &[LadderRung], fit_on: &LadderRung, gamma: f64, margin: f64) -> Result<EnvelopeFit, SolverError> {
    let a = 1.0 - 1.0 / gamma;
    let r = &fit_on.report;
    let c = r.difference[0] / r.input;
    let mut m_needed = 0.0f64;
    for (t, g) in r.times.iter().zip(&r.difference) {
        let t = t - r.times[0];
        if t <= 0.0 {
            continue;
        }
        let z = mittag_leffler_inverse(a, g / (c * r.input))?;
        m_needed = m_needed.max(z / (gamma_fn(a) * t.powf(a)));
    }
    let m = margin * m_needed;
    let mut worst = 0.0f64;
    for rung in rungs {
        let rr = &rung.report;
        for (t, g) in rr.times.iter().zip(&rr.difference) {
            let env = gronwall_envelope(c * rr.input, m, a, t - rr.times[0])?;
            worst = worst.max(g / env);
        }
    }
    // a ratio of exactly 1 at t = 0 is expected; allow for rounding only
    Ok(EnvelopeFit { a, c, m, margin, worst_ratio: worst, dominates: worst <= 1.0 + 1e-12 })
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseDependenceReport {
    pub epsilons: Vec<f64>,
    /// `||v_eps - v_{eps/2}|| / (||Delta X|| T^{delta/gamma})` per rung.
    pub ratios: Vec<f64>,
    pub spread: f64,
}

/// Same `u0`, enhanced data from coupled noise at `eps` and `eps/2` per rung.
pub fn noise_dependence_study(
    base: &NoiseConfig,
    grid: Grid,
    params: RegularityParams,
    epsilons: &[f64],
    u0: &FourierField,
    opts: &SolverOptions,
) -> Result<NoiseDependenceReport, SolverError> {
    let data = epsilons
        .par_iter()
        .map(|&e| EnhancedData::from_noise(&base.clone().with_epsilon(e), grid, params))
        .collect::<Result<Vec<_>, _>>()?;
    let c = CoefficientMap::solver_default();
    let ratios = data
        .windows(2)
        .map(|w| continuous_dependence_probe(&w[0], &w[1], u0, u0, &c, base.t_end, opts).map(|r| r.ratio))
        .collect::<Result<Vec<_>, _>>()?;
    let spread = ratios.iter().cloned().fold(f64::MIN, f64::max) / ratios.iter().cloned().fold(f64::MAX, f64::min);
    Ok(NoiseDependenceReport { epsilons: epsilons.to_vec(), ratios, spread })
}

#[derive(Debug, Clone, Serialize)]
pub struct CauchyRow {
    pub name: String,
    /// Per rung `m`, the seed-wise differences between `eps_m` and `eps_{m+1}`.
    pub per_seed: Vec<Vec<f64>>,
    pub medians: Vec<f64>,
    /// Root-mean-square over seeds (the `L^2(Omega)` difference).
    pub rms: Vec<f64>,
    /// `medians[m+1] / medians[m]`.
    pub rung_ratios: Vec<f64>,
    pub monotone_medians: bool,
    /// Fraction of seeds whose own differences decrease at every rung.
    pub monotone_fraction: f64,
}

impl CauchyRow {
    fn new(name: &str, per_rung: Vec<Vec<f64>>) -> Self {
        let medians: Vec<f64> = per_rung.iter().map(|v| median(v)).collect();
        let rms: Vec<f64> = per_rung.iter().map(|v| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()).collect();
        let rung_ratios: Vec<f64> = medians.windows(2).map(|w| w[1] / w[0]).collect();
        let seeds = per_rung.first().map_or(0, |v| v.len());
        let mono = (0..seeds).filter(|&s| per_rung.windows(2).all(|w| w[1][s] < w[0][s])).count();
        Self {
            name: name.to_string(),
            monotone_medians: medians.windows(2).all(|w| w[1] < w[0]),
            monotone_fraction: if seeds > 0 { mono as f64 / seeds as f64 } else { 0.0 },
            per_seed: per_rung,
            medians,
            rms,
            rung_ratios,
        }
    }
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonStudy {
    pub epsilons: Vec<f64>,
    pub seeds: Vec<u64>,
    pub sobolev_s: f64,
    pub solution: CauchyRow,
    /// `Y`, `X^lr`, `X^rLlr`.
    pub trees: Vec<CauchyRow>,
}

/// For every seed, solves the mollified equation at every `eps` of the ladder
/// with coupled noise and records `sup_t ||. ||_{H^s}` Cauchy differences of
/// the solution and of the trees.
pub fn epsilon_convergence_study(
    base: &NoiseConfig,
    grid: Grid,
    epsilons: &[f64],
    seeds: &[u64],
    u0: &FourierField,
    sobolev_s: f64,
    opts: &SolverOptions,
) -> Result<EpsilonStudy, SolverError> {
    if epsilons.len() < 2 {
        return Err(SolverError::Precondition("the ladder needs at least two epsilons".into()));
    }
    let configs: Vec<NoiseConfig> = epsilons.iter().map(|&e| base.clone().with_epsilon(e)).collect();
    for c in &configs[1..] {
        configs[0].check_coupled(c)?;
    }
    let params = RegularityParams::new(-0.2, 0.5)?;
    let symbols = [TreeSymbol::n(), TreeSymbol::lr(), TreeSymbol::rllr()];
    // per seed: [solution, Y, X^lr, X^rLlr] x rung
    let per_seed = seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<Vec<f64>>, SolverError> {
            let mut sols = Vec::with_capacity(configs.len());
            let mut data = Vec::with_capacity(configs.len());
            for cfg in &configs {
                let y = sample_y(&cfg.clone().with_seed(seed), grid)?.slice_from(0.0);
                let x = EnhancedData::from_y(&y, cfg.gamma, params)?;
                sols.push(solve_mollified_with(&y, u0, opts)?.u);
                data.push(x);
            }
            let mut rows = vec![Vec::new(); 1 + symbols.len()];
            for m in 0..configs.len() - 1 {
                rows[0].push(sup_sobolev_distance(&sols[m], &sols[m + 1], sobolev_s)?);
                for (j, s) in symbols.iter().enumerate() {
                    rows[j + 1].push(sup_sobolev_distance(data[m].get(s)?, data[m + 1].get(s)?, sobolev_s)?);
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rungs = epsilons.len() - 1;
    let gather = |row: usize| -> Vec<Vec<f64>> { (0..rungs).map(|m| per_seed.iter().map(|r| r[row][m]).collect()).collect() };
    Ok(EpsilonStudy {
        epsilons: epsilons.to_vec(),
        seeds: seeds.to_vec(),
        sobolev_s,
        solution: CauchyRow::new("u", gather(0)),
        trees: symbols.iter().enumerate().map(|(j, s)| CauchyRow::new(&s.name(), gather(j + 1))).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs_give_zero_difference() {
        let g = Grid::new(16, 1.75).unwrap();
        let p = RegularityParams::new(-0.2, 0.5).unwrap();
        let x = EnhancedData::zero(g, 1.75, 1e-3, 0.02, p).unwrap();
        let u0 = smooth_initial_condition(g, 0.5);
        let r = continuous_dependence_probe(&x, &x, &u0, &u0, &CoefficientMap::solver_default(), 0.02, &SolverOptions::default()).unwrap();
        assert!(r.difference.iter().all(|&d| d == 0.0));
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
