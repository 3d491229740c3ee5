//! Cross-checks of the three solvers: agreement with zero enhanced data and
//! reconstruction of the mollified solution at a fixed width.

use gfsb_core::algebra::{CoefficientMap, RegularityParams};
use gfsb_core::besov::sobolev_norm;
use gfsb_core::noise::{sample_y, NoiseConfig};
use gfsb_core::solver::{
    smooth_initial_condition, solve_deterministic, solve_mollified_with, solve_paracontrolled, solve_subcritical,
    sup_sobolev_distance, EnhancedData, OperatorBundle, SolverOptions,
};
use gfsb_core::spectral::Grid;

use crate::outcome::{num, Outcome};
use crate::spec::Params;
use crate::HarnessError;

struct Setup {
    grid: Grid,
    gamma: f64,
    regularity: RegularityParams,
    opts: SolverOptions,
    bundle: OperatorBundle,
    c: CoefficientMap,
}

fn setup(params: &Params) -> Result<Setup, HarnessError> {
    let gamma = params.float("gamma");
    let bundle = OperatorBundle::parse(params.text("bundle"))
        .ok_or_else(|| HarnessError::Validation(format!("unknown operator bundle `{}`", params.text("bundle"))))?;
    Ok(Setup {
        grid: Grid::new(params.count("n_modes")?, gamma)?,
        gamma,
        regularity: RegularityParams::new(params.float("alpha"), params.float("b"))?,
        opts: SolverOptions { nu: params.float("nu"), tol: params.float("tol"), ..Default::default() },
        bundle,
        c: CoefficientMap::solver_default(),
    })
}

fn degeneration(params: &Params, out: &mut Outcome) -> Result<(), HarnessError> {
    let s = setup(params)?;
    let t_end = params.float("t_end");
    let u0 = smooth_initial_condition(s.grid, params.float("u0_amplitude"));
    let match_tol = params.float("match_tol");
    let dts = params.floats("order_dts");
    if dts.len() < 2 {
        return Err(HarnessError::Validation("order_dts needs at least two step sizes".into()));
    }
    let mut residuals = Vec::with_capacity(dts.len());
    let mut rows = Vec::new();
    out.begin("zero_data_agreement");
    for &dt in dts {
        let direct = solve_deterministic(&u0, dt, t_end, &s.opts)?;
        let x = EnhancedData::zero(s.grid, s.gamma, dt, t_end, s.regularity)?;
        let sub = solve_subcritical(&x, &s.c, &u0, t_end, &s.opts)?;
        let para = solve_paracontrolled(&x, &s.c, &u0, s.bundle, t_end, &s.opts)?;
        let e_sub = sup_sobolev_distance(&sub.reconstruct(), &direct.u, 0.0)?;
        let e_para = sup_sobolev_distance(&para.reconstruct(), &direct.u, 0.0)?;
        out.at_most(format!("subcritical_dt={dt}"), e_sub, match_tol);
        out.at_most(format!("paracontrolled_dt={dt}"), e_para, match_tol);
        residuals.push(direct.diagnostics.mild_residual);
        rows.push(vec![num(dt), num(e_sub), num(e_para), num(direct.diagnostics.mild_residual)]);
    }

    out.begin("mild_residual_order");
    let (target, tol) = (params.float("order_target"), params.float("order_tol"));
    let mut orders = Vec::new();
    for (w, d) in residuals.windows(2).zip(dts.windows(2)) {
        let order = (w[0] / w[1]).ln() / (d[0] / d[1]).ln();
        out.check(
            format!("order_dt={}", d[1]),
            (order - target).abs() <= tol,
            order,
            target,
            format!("residual {:.3e} -> {:.3e}, allowed deviation {tol}", w[0], w[1]),
        );
        orders.push((d[1], order));
    }
    out.csv("degeneration.csv", &["dt", "subcritical_l2_gap", "paracontrolled_l2_gap", "mild_residual"], &rows)?;
    out.series(
        "mild_residual",
        "log2_dt",
        "log2_residual",
        dts.iter().zip(&residuals).map(|(d, r)| (d.log2(), r.log2())).collect(),
    );
    out.metric("orders", orders);
    Ok(())
}

fn reconstruction(params: &Params, seed: u64, out: &mut Outcome) -> Result<(), HarnessError> {
    let s = setup(params)?;
    let t_end = params.float("t_end");
    let sob = params.float("sobolev_s");
    let config = NoiseConfig::new(s.gamma, params.float("epsilon"), seed, params.float("dt"), t_end);
    config.validate(s.grid)?;
    let u0 = smooth_initial_condition(s.grid, params.float("u0_amplitude"));
    let y = sample_y(&config, s.grid)?.slice_from(0.0);
    let direct = solve_mollified_with(&y, &u0, &s.opts)?;
    let x = EnhancedData::from_y(&y, s.gamma, s.regularity)?;
    let scale = direct.u.fields().iter().map(|f| sobolev_norm(f, sob)).fold(0.0, f64::max);
    let max_rel = params.float("max_relative_error");

    out.begin("subcritical_reconstruction");
    let sub = solve_subcritical(&x, &s.c, &u0, t_end, &s.opts)?;
    let u_sub = sub.reconstruct();
    let rel_sub = sup_sobolev_distance(&u_sub, &direct.u, sob)? / scale;
    out.at_most("relative_error", rel_sub, max_rel);
    out.metric("subcritical_mild_residual", sub.mild_residual);

    out.begin("paracontrolled_reconstruction");
    let para = solve_paracontrolled(&x, &s.c, &u0, s.bundle, t_end, &s.opts)?;
    let u_para = para.reconstruct();
    let rel_para = sup_sobolev_distance(&u_para, &direct.u, sob)? / scale;
    out.at_most("relative_error", rel_para, max_rel);
    out.metric("paracontrolled_ansatz_residual", para.ansatz_residual);
    out.metric("paracontrolled_mild_residual", para.mild_residual);
    out.metric("direct_diagnostics", direct.diagnostics);

    let rows: Vec<Vec<String>> = direct
        .u
        .times()
        .iter()
        .enumerate()
        .step_by(((direct.u.len() - 1) / 100).max(1))
        .map(|(i, t)| {
            let d = direct.u.field(i);
            vec![num(*t), num(sobolev_norm(d, sob)), num(sobolev_norm(&(u_sub.field(i) - d), sob)), num(sobolev_norm(&(u_para.field(i) - d), sob))]
        })
        .collect();
    out.series(
        "reconstruction_gap",
        "t",
        "paracontrolled_hs_gap",
        rows.iter().map(|r| (r[0].parse().unwrap(), r[3].parse().unwrap())).collect(),
    );
    out.csv("reconstruction.csv", &["t", "direct_hs_norm", "subcritical_gap", "paracontrolled_gap"], &rows)?;
    Ok(())
}

pub fn run(params: &Params, seed: u64) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::new();
    match params.text("target") {
        "degeneration" => degeneration(params, &mut out)?,
        _ => reconstruction(params, seed, &mut out)?,
    }
    Ok(out)
}
