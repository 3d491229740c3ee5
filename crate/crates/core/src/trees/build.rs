//! Construction of `Y^lr`, `Y^rLlr` and their recentered versions `X^lr`, `X^rLlr`.

use crate::algebra::TreeSymbol;
use crate::noise::{sample_y, NoiseConfig};
use crate::spectral::{apply_derivative, pointwise_product, FourierField, Grid};
use crate::trajectory::Trajectory;

use super::duhamel::{burn_in_length, duhamel_from_first_node, DEFAULT_BURN_IN_TOL};
use super::{Provenance, TreeError, TreeTrajectory};

/// `1/2 D(f g)` with the dealiased product.
pub fn half_d_product(f: &FourierField, g: &FourierField) -> Result<FourierField, TreeError> {
    Ok(apply_derivative(&pointwise_product(f, g)?).scale(0.5))
}

fn forcing(a: &Trajectory, b: &Trajectory, tag: &str) -> Result<Trajectory, TreeError> {
    if !a.same_times(b) {
        return Err(crate::trajectory::TrajectoryError::TimeGridMismatch.into());
    }
    let fields = a
        .fields()
        .iter()
        .zip(b.fields())
        .map(|(x, y)| half_d_product(x, y))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Trajectory::derived(tag, a, fields))
}

fn provenance(parents: &[&str], tr: &Trajectory, gamma: f64, start: &str, from: f64) -> Provenance {
    Provenance {
        parents: parents.iter().map(|s| s.to_string()).collect(),
        gamma,
        dt: tr.dt().unwrap_or(0.0),
        start: start.to_string(),
        stationary_from: from,
    }
}

/// `Y^lr(t) = int_{-inf}^t P(t - s) 1/2 D(Y^2)(s) ds`, with `y` stationary
/// from its first node.
pub fn build_ylr(y: &Trajectory, gamma: f64) -> Result<TreeTrajectory, TreeError> {
    build_ylr_with_tol(y, gamma, DEFAULT_BURN_IN_TOL)
}

pub fn build_ylr_with_tol(y: &Trajectory, gamma: f64, tol: f64) -> Result<TreeTrajectory, TreeError> {
    let l = burn_in_length(tol, y.grid(), gamma);
    let from = y.time(0) + l;
    if from > 1e-12 {
        return Err(TreeError::InsufficientBurnIn { needed: l, have: -y.time(0) });
    }
    let tr = duhamel_from_first_node(&forcing(y, y, "1/2 D(Y^2)")?, gamma)?;
    Ok(TreeTrajectory {
        symbol: TreeSymbol::lr(),
        provenance: provenance(&["Y"], &tr, gamma, "stationary", from),
        trajectory: tr.with_meta(crate::trajectory::TrajectoryMeta::Derived("Y^lr".into())),
    })
}

/// `Y^rLlr(t) = int_{-inf}^t P(t - s) 1/2 D(Y^lr Y)(s) ds`.
pub fn build_yrllr(y: &Trajectory, ylr: &TreeTrajectory, gamma: f64) -> Result<TreeTrajectory, TreeError> {
    build_yrllr_with_tol(y, ylr, gamma, DEFAULT_BURN_IN_TOL)
}

pub fn build_yrllr_with_tol(
    y: &Trajectory,
    ylr: &TreeTrajectory,
    gamma: f64,
    tol: f64,
) -> Result<TreeTrajectory, TreeError> {
    let l = burn_in_length(tol, y.grid(), gamma);
    let from = ylr.provenance.stationary_from + l;
    if from > 1e-12 {
        return Err(TreeError::InsufficientBurnIn { needed: 2.0 * l, have: -y.time(0) });
    }
    let tr = duhamel_from_first_node(&forcing(&ylr.trajectory, y, "1/2 D(Y^lr Y)")?, gamma)?;
    Ok(TreeTrajectory {
        symbol: TreeSymbol::rllr(),
        provenance: provenance(&["Y", "Y^lr"], &tr, gamma, "stationary", from),
        trajectory: tr.with_meta(crate::trajectory::TrajectoryMeta::Derived("Y^rLlr".into())),
    })
}

/// `Y`, `Y^lr`, `Y^rLlr` on a window long enough for both trees to be stationary at `t = 0`.
#[derive(Debug, Clone)]
pub struct StationaryTrees {
    pub y: Trajectory,
    pub ylr: TreeTrajectory,
    pub yrllr: TreeTrajectory,
}

/// Samples `Y` with a burn-in of at least `2 burn_in_length(tol)` and builds both trees.
pub fn sample_stationary_trees(
    config: &NoiseConfig,
    grid: Grid,
    tol: f64,
) -> Result<StationaryTrees, TreeError> {
    let l = burn_in_length(tol, grid, config.gamma);
    let steps = (2.0 * l / config.dt).ceil();
    let cfg = config.clone().with_burn_in(config.burn_in.max(steps * config.dt));
    let y = sample_y(&cfg, grid)?;
    let ylr = build_ylr_with_tol(&y, config.gamma, tol)?;
    let yrllr = build_yrllr_with_tol(&y, &ylr, config.gamma, tol)?;
    Ok(StationaryTrees { y, ylr, yrllr })
}

/// `X^lr(t) = Y^lr(t) - P(t) Y^lr(0)` for `t >= 0`; `X^rLlr` solves
/// `L X = 1/2 D(X^lr Y)` from zero at `t = 0`.
pub fn recenter(symbol: &TreeSymbol, trees: &StationaryTrees, gamma: f64) -> Result<TreeTrajectory, TreeError> {
    let name = symbol.name();
    match name.as_str() {
        "lr" => recenter_lr(&trees.ylr, gamma),
        "rLlr" => {
            let xlr = recenter_lr(&trees.ylr, gamma)?;
            let y0 = trees.y.slice_from(0.0);
            build_xrllr_from_zero(&y0, &xlr, gamma)
        }
        _ => Err(TreeError::UnknownSymbol(name)),
    }
}

fn recenter_lr(ylr: &TreeTrajectory, gamma: f64) -> Result<TreeTrajectory, TreeError> {
    let tr = ylr.trajectory.slice_from(0.0);
    let t0 = tr.time(0);
    let base = tr.field(0).clone();
    let g = base.grid();
    let mut fields = Vec::with_capacity(tr.len());
    for (i, f) in tr.fields().iter().enumerate() {
        if i == 0 {
            fields.push(FourierField::zeros(g));
            continue;
        }
        let t = tr.time(i) - t0;
        let decayed = base.multiply(|k| (-t * g.wavenumber(k).powf(gamma)).exp());
        fields.push(f - &decayed);
    }
    let out = Trajectory::derived("X^lr", &tr, fields);
    Ok(TreeTrajectory {
        symbol: TreeSymbol::lr(),
        provenance: provenance(&["Y^lr"], &out, gamma, "zero", t0),
        trajectory: out,
    })
}

/// `X^lr` solving `L X = 1/2 D(Y^2)`, `X(t_0) = 0`, on the nodes of `y`.
pub fn build_xlr_from_zero(y: &Trajectory, gamma: f64) -> Result<TreeTrajectory, TreeError> {
    let tr = duhamel_from_first_node(&forcing(y, y, "1/2 D(Y^2)")?, gamma)?;
    Ok(TreeTrajectory {
        symbol: TreeSymbol::lr(),
        provenance: provenance(&["Y"], &tr, gamma, "zero", y.time(0)),
        trajectory: tr.with_meta(crate::trajectory::TrajectoryMeta::Derived("X^lr".into())),
    })
}

/// `X^rLlr` solving `L X = 1/2 D(X^lr Y)`, `X(t_0) = 0`.
pub fn build_xrllr_from_zero(y: &Trajectory, xlr: &TreeTrajectory, gamma: f64) -> Result<TreeTrajectory, TreeError> {
    let tr = duhamel_from_first_node(&forcing(&xlr.trajectory, y, "1/2 D(X^lr Y)")?, gamma)?;
    Ok(TreeTrajectory {
        symbol: TreeSymbol::rllr(),
        provenance: provenance(&["Y", "X^lr"], &tr, gamma, "zero", y.time(0)),
        trajectory: tr.with_meta(crate::trajectory::TrajectoryMeta::Derived("X^rLlr".into())),
    })
}

/// `(X^lr, X^rLlr)` on the nodes of `y` with `t >= 0`.
pub fn build_x_trees(y: &Trajectory, gamma: f64) -> Result<(TreeTrajectory, TreeTrajectory), TreeError> {
    let y0 = y.slice_from(0.0);
    let xlr = build_xlr_from_zero(&y0, gamma)?;
    let xrllr = build_xrllr_from_zero(&y0, &xlr, gamma)?;
    Ok((xlr, xrllr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn frequency_selection() {
        // Y supported on modes 2 and 5 feeds 1/2 D(Y^2) only on 3, 4, 7 (and 10 is cut)
        let g = Grid::new(8, 2.0).unwrap();
        let mut f = FourierField::zeros(g);
        f.set(2, Complex64::new(0.3, 0.1));
        f.set(5, Complex64::new(-0.2, 0.4));
        let h = half_d_product(&f, &f).unwrap();
        for k in 1..=8i64 {
            let on = matches!(k, 3 | 4 | 7);
            assert_eq!(h.get(k).norm() > 1e-14, on, "k = {k}");
        }
    }

    #[test]
    fn recentered_tree_vanishes_at_zero_and_matches_from_zero_build() {
        let g = Grid::new(8, 2.0).unwrap();
        let cfg = NoiseConfig::new(2.0, 1.0 / 8.0, 3, 2e-3, 0.2);
        let trees = sample_stationary_trees(&cfg, g, 1e-2).unwrap();
        let xlr = recenter(&TreeSymbol::lr(), &trees, 2.0).unwrap();
        assert!(xlr.trajectory.field(0).is_zero());
        let (zlr, zrllr) = build_x_trees(&trees.y, 2.0).unwrap();
        for (a, b) in xlr.trajectory.fields().iter().zip(zlr.trajectory.fields()) {
            assert!(a.max_abs_diff(b) < 1e-12);
        }
        let xr = recenter(&TreeSymbol::rllr(), &trees, 2.0).unwrap();
        assert!(xr.trajectory.field(0).is_zero());
        assert!(xr.trajectory.last().max_abs_diff(zrllr.trajectory.last()) < 1e-12);
        assert!(matches!(recenter(&TreeSymbol::n(), &trees, 2.0), Err(TreeError::UnknownSymbol(_))));
    }

    #[test]
    fn quadratic_scaling_in_the_noise() {
        let g = Grid::new(8, 1.75).unwrap();
        let cfg = NoiseConfig::new(1.75, 1.0 / 8.0, 5, 2e-3, 0.1);
        let y = sample_y(&cfg, g).unwrap();
        let y3 = sample_y(&NoiseConfig { noise_scale: 3.0, ..cfg }, g).unwrap();
        let (a, _) = build_x_trees(&y, 1.75).unwrap();
        let (b, _) = build_x_trees(&y3, 1.75).unwrap();
        assert!(b.trajectory.last().max_abs_diff(&a.trajectory.last().scale(9.0)) < 1e-12);
    }
}
