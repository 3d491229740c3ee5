//! Lipschitz dependence on the initial datum via a perturbation ladder, with
//! a fitted Gronwall envelope, plus the dependence on the noise width.

use gfsb_core::algebra::{CoefficientMap, RegularityParams};
use gfsb_core::noise::NoiseConfig;
use gfsb_core::solver::{
    mittag_leffler, noise_dependence_study, perturbation_ladder, smooth_initial_condition, EnhancedData, SolverOptions,
};
use gfsb_core::spectral::{FourierField, Grid};
use num_complex::Complex64;

use crate::outcome::{num, Outcome};
use crate::spec::Params;
use crate::HarnessError;

pub fn run(params: &Params, seed: u64) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::new();
    let gamma = params.float("gamma");
    let grid = Grid::new(params.count("n_modes")?, gamma)?;
    let regularity = RegularityParams::new(params.float("alpha"), params.float("b"))?;
    let t_end = params.float("t_end");
    let config = NoiseConfig::new(gamma, params.float("epsilon"), seed, params.float("dt"), t_end);
    config.validate(grid)?;
    let x = EnhancedData::from_noise(&config, grid, regularity)?;
    let u0 = smooth_initial_condition(grid, params.float("u0_amplitude"));
    let k = params.count("direction_mode")?;
    if k == 0 || k > grid.n_modes() {
        return Err(HarnessError::Validation(format!("direction_mode must lie in 1..={}", grid.n_modes())));
    }
    let direction = FourierField::mode(grid, k, Complex64::new(0.5, 0.5));
    let opts = SolverOptions { nu: params.float("nu"), tol: params.float("tol"), ..Default::default() };
    let hs = params.floats("hs");

    out.begin("perturbation_ladder");
    let ladder = perturbation_ladder(&x, &CoefficientMap::solver_default(), &u0, &direction, hs, t_end, &opts)?;
    let decades = (hs.iter().cloned().fold(f64::MIN, f64::max) / hs.iter().cloned().fold(f64::MAX, f64::min)).log10();
    out.at_least("input_decades", decades, 4.0);
    let (target, tol) = (params.float("slope_target"), params.float("slope_tol"));
    out.check(
        "log_log_slope",
        (ladder.slope - target).abs() <= tol,
        ladder.slope,
        target,
        format!("allowed deviation {tol}"),
    );
    let env = &ladder.envelope;
    out.check(
        "envelope_dominates",
        env.dominates,
        env.worst_ratio,
        1.0,
        format!("C = {:.4}, M = {:.4}, order {:.4}", env.c, env.m, env.a),
    );
    let rows: Vec<Vec<String>> = ladder
        .rungs
        .iter()
        .map(|r| vec![num(r.h), num(r.report.input), num(r.report.final_difference), num(r.report.ratio)])
        .collect();
    out.csv("perturbation_ladder.csv", &["h", "input", "final_difference", "ratio"], &rows)?;
    out.series(
        "perturbation_ladder",
        "log10_input",
        "log10_final_difference",
        ladder.rungs.iter().map(|r| (r.report.input.log10(), r.report.final_difference.log10())).collect(),
    );

    out.begin("mittag_leffler_unit_order");
    let e1 = mittag_leffler(1.0, 1.0)?;
    let gap = (e1 - std::f64::consts::E).abs();
    out.at_most("e1_of_one_is_e", gap, 1e-12);

    out.begin("noise_width_dependence");
    let base = config.clone().with_seed(seed);
    let nd = noise_dependence_study(&base, grid, regularity, params.floats("noise_epsilons"), &u0, &opts)?;
    out.check(
        "ratios_finite",
        nd.ratios.iter().all(|r| r.is_finite()),
        nd.spread,
        f64::INFINITY,
        format!("difference over data distance per rung {:?}", nd.ratios),
    );
    out.metric("ladder", &ladder);
    out.metric("noise_dependence", &nd);
    Ok(out)
}
