//! Coupled-noise Cauchy study of the mollified solution and the trees along a
//! halving ladder of mollification widths.

use gfsb_core::noise::{replica_seed, NoiseConfig};
use gfsb_core::solver::{epsilon_convergence_study, smooth_initial_condition, CauchyRow, SolverOptions};
use gfsb_core::spectral::{Grid, MollifierProfile};

use super::positive_count;
use crate::outcome::{num, Outcome};
use crate::spec::Params;
use crate::HarnessError;

fn profile(name: &str) -> Result<MollifierProfile, HarnessError> {
    MollifierProfile::parse(name).ok_or_else(|| HarnessError::Validation(format!("unknown mollifier profile `{name}`")))
}

fn row_csv(rows: &mut Vec<Vec<String>>, r: &CauchyRow, epsilons: &[f64]) {
    for (m, med) in r.medians.iter().enumerate() {
        rows.push(vec![r.name.clone(), num(epsilons[m]), num(epsilons[m + 1]), num(*med), num(r.rms[m])]);
    }
}

pub fn run(params: &Params, seed: u64) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::new();
    let gamma = params.float("gamma");
    let grid = Grid::new(params.count("n_modes")?, gamma)?;
    let epsilons = params.floats("epsilons").to_vec();
    let mut base = NoiseConfig::new(gamma, epsilons[0], 0, params.float("dt"), params.float("t_end"));
    base.profile = profile(params.text("profile"))?;
    for &e in &epsilons {
        base.clone().with_epsilon(e).validate(grid)?;
    }
    let seeds: Vec<u64> = (0..positive_count(params, "replicas")?).map(|i| replica_seed(seed, i as u64)).collect();
    let u0 = smooth_initial_condition(grid, params.float("u0_amplitude"));
    let opts = SolverOptions { nu: params.float("nu"), ..Default::default() };
    let study = epsilon_convergence_study(&base, grid, &epsilons, &seeds, &u0, params.float("sobolev_s"), &opts)?;

    out.begin("monotone_medians");
    for r in std::iter::once(&study.solution).chain(&study.trees) {
        let worst = r.rung_ratios.iter().cloned().fold(0.0, f64::max);
        out.check(
            format!("{}_decreasing", r.name),
            r.monotone_medians,
            worst,
            1.0,
            format!("medians {:?}", r.medians),
        );
    }

    out.begin("tree_ratios_below_y");
    let y = study.trees.iter().find(|r| r.name == "n").expect("Y row");
    for r in study.trees.iter().filter(|r| r.name != "n") {
        let excess = r.rung_ratios.iter().zip(&y.rung_ratios).map(|(a, b)| a - b).fold(f64::MIN, f64::max);
        out.check(
            format!("{}_ratios_below_y", r.name),
            excess < 0.0,
            excess,
            0.0,
            format!("rung ratios {:?} against Y {:?}", r.rung_ratios, y.rung_ratios),
        );
    }

    let mut rows = Vec::new();
    for r in std::iter::once(&study.solution).chain(&study.trees) {
        row_csv(&mut rows, r, &epsilons);
        out.series(
            &format!("cauchy_median_{}", r.name),
            "rung",
            "median_sup_sobolev_difference",
            r.medians.iter().enumerate().map(|(m, &v)| (m as f64, v)).collect(),
        );
        out.metric(&format!("monotone_fraction_{}", r.name), r.monotone_fraction);
    }
    out.csv("cauchy_medians.csv", &["quantity", "epsilon", "epsilon_half", "median", "rms"], &rows)?;
    out.json("epsilon_study.json", &study)?;
    Ok(out)
}
