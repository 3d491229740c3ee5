//! Monte-Carlo covariance checks: the stationary OU modes, mixed Gaussian
//! moments against pairing enumeration, and the second moments of `Y^lr`.

use gfsb_core::noise::{replica_seed, sample_y, NoiseConfig};
use gfsb_core::spectral::Grid;
use gfsb_core::trees::{
    build_ylr_with_tol, burn_in_length, six_point_admissible, six_point_report, wick_expectation, ylr_second_moment,
    PairingClass,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::positive_count;
use crate::outcome::{num, Outcome};
use crate::spec::Params;
use crate::HarnessError;

/// Running mean and standard error of a real statistic.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    fn stderr(&self) -> f64 {
        let n = self.n as f64;
        let var = (self.sum_sq - self.sum * self.sum / n) / (n - 1.0);
        (var.max(0.0) / n).sqrt()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CovarianceRow {
    pub gamma: f64,
    pub modes: (i64, i64),
    pub t: f64,
    pub s: f64,
    pub analytic: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub within: bool,
}

/// `(k, l)` pairs from entries like `2` (meaning `2:2`) or `1:3`.
fn mode_pairs(items: &[&str]) -> Result<Vec<(i64, i64)>, HarnessError> {
    let parse = |s: &str| -> Result<i64, HarnessError> {
        let k: i64 = s.trim().parse().map_err(|_| HarnessError::Validation(format!("bad mode `{s}`")))?;
        if k <= 0 {
            return Err(HarnessError::Validation(format!("modes must be positive, got {k}")));
        }
        Ok(k)
    };
    items
        .iter()
        .map(|s| match s.split_once(':') {
            Some((a, b)) => Ok((parse(a)?, parse(b)?)),
            None => parse(s).map(|k| (k, k)),
        })
        .collect()
}

fn node_index(t: f64, dt: f64) -> Result<usize, HarnessError> {
    let i = (t / dt).round();
    if (i * dt - t).abs() > 1e-9 * dt.max(t.abs()) || i < 0.0 {
        return Err(HarnessError::Validation(format!("time {t} is not a non-negative multiple of dt = {dt}")));
    }
    Ok(i as usize)
}

/// Value of mode `k` (negative for conjugates) at node `i`.
fn mode_value(tr: &gfsb_core::trajectory::Trajectory, k: i64, i: usize) -> Complex64 {
    tr.field(i).get(k)
}

fn base_config(params: &Params, gamma: f64, t_end: f64) -> NoiseConfig {
    NoiseConfig::new(gamma, params.float("epsilon"), 0, params.float("dt"), t_end)
}

/// Empirical `E[Y_k(t) conj Y_l(s)]` on the product grid of `times`, against
/// `sigma_k^2 e^{-|k|^gamma |t - s|}` (zero when `k != l`).
pub fn ou_covariance_rows(params: &Params, seed: u64) -> Result<Vec<CovarianceRow>, HarnessError> {
    let samples = positive_count(params, "samples")?;
    let times = params.floats("times").to_vec();
    let pairs = mode_pairs(&params.items("modes"))?;
    let dt = params.float("dt");
    let t_end = times.iter().cloned().fold(0.0, f64::max).max(dt);
    let idx = times.iter().map(|&t| node_index(t, dt)).collect::<Result<Vec<_>, _>>()?;
    let factor = params.float("se_factor");
    let mut rows = Vec::new();
    for (gi, &gamma) in params.floats("gammas").iter().enumerate() {
        let grid = Grid::new(params.count("n_modes")?, gamma)?;
        let config = base_config(params, gamma, t_end);
        config.validate(grid)?;
        let gamma_seed = replica_seed(seed, gi as u64);
        let stats: Vec<Vec<f64>> = (0..samples)
            .into_par_iter()
            .map(|r| {
                let y = sample_y(&config.clone().with_seed(replica_seed(gamma_seed, r as u64)), grid)?;
                let mut v = Vec::with_capacity(pairs.len() * idx.len() * idx.len());
                for &(k, l) in &pairs {
                    for &i in &idx {
                        for &j in &idx {
                            v.push((mode_value(&y, k, i) * mode_value(&y, l, j).conj()).re);
                        }
                    }
                }
                Ok(v)
            })
            .collect::<Result<_, HarnessError>>()?;
        let mut m = vec![Moments::default(); stats[0].len()];
        for v in &stats {
            for (acc, &x) in m.iter_mut().zip(v) {
                acc.push(x);
            }
        }
        let mut c = 0;
        for &(k, l) in &pairs {
            for &t in &times {
                for &s in &times {
                    let analytic = if k == l {
                        config.stationary_variance(grid, k as usize) * (-grid.rate(k as usize) * (t - s).abs()).exp()
                    } else {
                        0.0
                    };
                    let (empirical, stderr) = (m[c].mean(), m[c].stderr());
                    rows.push(CovarianceRow {
                        gamma,
                        modes: (k, l),
                        t,
                        s,
                        analytic,
                        empirical,
                        stderr,
                        within: (empirical - analytic).abs() <= factor * stderr,
                    });
                    c += 1;
                }
            }
        }
    }
    Ok(rows)
}

fn covariance_csv(out: &mut Outcome, name: &str, rows: &[CovarianceRow]) -> Result<(), HarnessError> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.gamma),
                format!("{}:{}", r.modes.0, r.modes.1),
                num(r.t),
                num(r.s),
                num(r.analytic),
                num(r.empirical),
                num(r.stderr),
            ]
        })
        .collect();
    out.csv(name, &["gamma", "modes", "t", "s", "analytic", "empirical", "stderr"], &body)
}

fn ou(params: &Params, seed: u64, out: &mut Outcome) -> Result<(), HarnessError> {
    let rows = ou_covariance_rows(params, seed)?;
    let min_fraction = params.float("min_fraction");
    let mut groups: Vec<(f64, (i64, i64))> = rows.iter().map(|r| (r.gamma, r.modes)).collect();
    groups.dedup();
    for (gamma, modes) in groups {
        out.begin(format!("gamma={gamma} modes={}:{}", modes.0, modes.1));
        let cells: Vec<&CovarianceRow> = rows.iter().filter(|r| r.gamma == gamma && r.modes == modes).collect();
        let frac = cells.iter().filter(|r| r.within).count() as f64 / cells.len() as f64;
        out.at_least("fraction_within_se", frac, min_fraction);
    }
    let lag: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.modes.0 == r.modes.1 && r.s == 0.0 && r.gamma == rows[0].gamma && r.modes == rows[0].modes)
        .map(|r| (r.t, r.empirical))
        .collect();
    out.series("ou_autocovariance", "lag", "empirical_covariance", lag);
    covariance_csv(out, "ou_covariance.csv", &rows)
}

#[derive(Debug, Clone, Serialize)]
struct MomentRow {
    label: String,
    factors: Vec<(i64, f64)>,
    analytic: f64,
    empirical: f64,
    empirical_imag: f64,
    stderr: f64,
}

/// Mixed moments of `Y` modes. Negative modes are conjugates.
fn moment_sets() -> Vec<(&'static str, Vec<(i64, f64)>)> {
    vec![
        ("4pt-two-modes", vec![(1, 0.0), (-1, 0.05), (2, 0.1), (-2, 0.15)]),
        ("4pt-one-mode", vec![(1, 0.0), (1, 0.05), (-1, 0.1), (-1, 0.2)]),
        ("4pt-equal-time", vec![(1, 0.1), (-1, 0.1), (1, 0.1), (-1, 0.1)]),
        ("6pt-p1-p3", vec![(1, 0.1), (-1, 0.05), (2, 0.05), (-1, 0.2), (1, 0.15), (-2, 0.15)]),
        ("6pt-p1-p2", vec![(1, 0.1), (1, 0.05), (2, 0.05), (-1, 0.2), (-1, 0.15), (-2, 0.15)]),
        ("6pt-one-mode", vec![(1, 0.0), (1, 0.05), (1, 0.1), (-1, 0.1), (-1, 0.15), (-1, 0.2)]),
    ]
}

fn wick(params: &Params, seed: u64, out: &mut Outcome) -> Result<(), HarnessError> {
    let samples = positive_count(params, "samples")?;
    let dt = params.float("dt");
    let factor = params.float("se_factor");
    let sets = moment_sets();
    let t_end = 0.2f64.max(dt);
    let mut rows = Vec::new();
    for (gi, &gamma) in params.floats("gammas").iter().enumerate() {
        let grid = Grid::new(params.count("n_modes")?, gamma)?;
        let config = base_config(params, gamma, t_end);
        let idx: Vec<Vec<usize>> = sets
            .iter()
            .map(|(_, f)| f.iter().map(|&(_, t)| node_index(t, dt)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<_, _>>()?;
        let gamma_seed = replica_seed(seed, 1000 + gi as u64);
        let draws: Vec<Vec<Complex64>> = (0..samples)
            .into_par_iter()
            .map(|r| {
                let y = sample_y(&config.clone().with_seed(replica_seed(gamma_seed, r as u64)), grid)?;
                Ok(sets
                    .iter()
                    .zip(&idx)
                    .map(|((_, f), ix)| f.iter().zip(ix).map(|(&(k, _), &i)| mode_value(&y, k, i)).product())
                    .collect())
            })
            .collect::<Result<_, HarnessError>>()?;
        out.begin(format!("moments gamma={gamma}"));
        for (c, (label, f)) in sets.iter().enumerate() {
            let mut re = Moments::default();
            let mut im = Moments::default();
            for d in &draws {
                re.push(d[c].re);
                im.push(d[c].im);
            }
            let w = wick_expectation(f, &config, grid);
            let dev = (re.mean() - w.value).abs();
            out.check(
                format!("{label}_within_se"),
                dev <= factor * re.stderr(),
                dev / re.stderr(),
                factor,
                format!("empirical {:.6e} vs pairing sum {:.6e}", re.mean(), w.value),
            );
            rows.push(MomentRow {
                label: format!("{label} gamma={gamma}"),
                factors: f.clone(),
                analytic: w.value,
                empirical: re.mean(),
                empirical_imag: im.mean(),
                stderr: re.stderr(),
            });
        }

        out.begin(format!("six_point_decomposition gamma={gamma}"));
        let classes: std::collections::BTreeSet<PairingClass> = six_point_admissible().iter().map(|(c, _)| *c).collect();
        out.check("three_pairing_classes", classes.len() == 3, classes.len() as f64, 3.0, "admissible matchings fall into P1, P2, P3");
        let mut seen = std::collections::BTreeSet::new();
        for (label, f) in sets.iter().filter(|(_, f)| f.len() == 6) {
            let modes: [i64; 6] = std::array::from_fn(|i| f[i].0);
            let times: [f64; 6] = std::array::from_fn(|i| f[i].1);
            if modes[1] + modes[2] == 0 || modes[4] + modes[5] == 0 {
                continue;
            }
            let rep = six_point_report(modes, times, &config, grid);
            let gap = (rep.full_wick - rep.total).abs();
            out.check(
                format!("{label}_decomposition_exact"),
                gap <= 1e-14 * rep.full_wick.abs(),
                gap,
                1e-14 * rep.full_wick.abs(),
                "P1 + P2 + P3 equals the full pairing sum",
            );
            for (c, v) in &rep.class_values {
                if *v != 0.0 {
                    seen.insert(*c);
                }
            }
        }
        out.check("every_class_realized", seen.len() == 3, seen.len() as f64, 3.0, format!("{seen:?}"));
    }
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.label.clone(), num(r.analytic), num(r.empirical), num(r.empirical_imag), num(r.stderr)])
        .collect();
    out.csv("wick_moments.csv", &["moment", "pairing_sum", "empirical", "empirical_imag", "stderr"], &body)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct YlrRow {
    gamma: f64,
    k: i64,
    analytic: f64,
    empirical: f64,
    stderr: f64,
}

/// Per replica: the time average of `|Y^lr_k|^2` over the stationary window,
/// so the standard error comes from independent replica means.
fn ylr(params: &Params, seed: u64, out: &mut Outcome) -> Result<(), HarnessError> {
    let samples = positive_count(params, "samples")?;
    let modes: Vec<i64> = mode_pairs(&params.items("modes"))?.into_iter().map(|(k, _)| k).collect();
    let dt = params.float("dt");
    let window = params.floats("times").iter().cloned().fold(0.0, f64::max);
    let tol = params.float("burn_tol");
    let factor = params.float("se_factor");
    let mut rows = Vec::new();
    for (gi, &gamma) in params.floats("gammas").iter().enumerate() {
        let grid = Grid::new(params.count("n_modes")?, gamma)?;
        let burn = (burn_in_length(tol, grid, gamma) / dt).ceil() * dt;
        let config = base_config(params, gamma, window).calibrated().with_burn_in(burn);
        config.validate(grid)?;
        let gamma_seed = replica_seed(seed, 2000 + gi as u64);
        let means: Vec<Vec<f64>> = (0..samples)
            .into_par_iter()
            .map(|r| {
                let y = sample_y(&config.clone().with_seed(replica_seed(gamma_seed, r as u64)), grid)?;
                let tree = build_ylr_with_tol(&y, gamma, tol)?;
                let tr = tree.trajectory.slice_from(0.0);
                let n = tr.len() as f64;
                Ok(modes.iter().map(|&k| tr.fields().iter().map(|f| f.get(k).norm_sqr()).sum::<f64>() / n).collect())
            })
            .collect::<Result<_, HarnessError>>()?;
        out.begin(format!("ylr gamma={gamma}"));
        for (c, &k) in modes.iter().enumerate() {
            let mut m = Moments::default();
            for v in &means {
                m.push(v[c]);
            }
            let analytic = ylr_second_moment(&config, grid, k)?;
            let dev = (m.mean() - analytic).abs();
            out.check(
                format!("k={k}_within_se"),
                dev <= factor * m.stderr(),
                dev / m.stderr(),
                factor,
                format!("empirical {:.6e} +- {:.2e} vs closed form {:.6e}", m.mean(), m.stderr(), analytic),
            );
            rows.push(YlrRow { gamma, k, analytic, empirical: m.mean(), stderr: m.stderr() });
        }
        out.metric(&format!("noise_scale_gamma_{gamma}"), config.noise_scale);
    }
    let body: Vec<Vec<String>> =
        rows.iter().map(|r| vec![num(r.gamma), r.k.to_string(), num(r.analytic), num(r.empirical), num(r.stderr)]).collect();
    out.csv("ylr_second_moments.csv", &["gamma", "k", "analytic", "empirical", "stderr"], &body)?;
    for &gamma in params.floats("gammas") {
        out.series(
            &format!("ylr_second_moment_gamma_{gamma}"),
            "k",
            "empirical_over_analytic",
            rows.iter().filter(|r| r.gamma == gamma).map(|r| (r.k as f64, r.empirical / r.analytic)).collect(),
        );
    }
    Ok(())
}

pub fn run(params: &Params, seed: u64) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::new();
    match params.text("target") {
        "ou" => ou(params, seed, &mut out)?,
        "wick" => wick(params, seed, &mut out)?,
        _ => ylr(params, seed, &mut out)?,
    }
    Ok(out)
}
