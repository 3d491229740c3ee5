//! Remainder equation in the subcritical regime `2 alpha + b > 0`:
//!
//! `L v = nu D(v^2) + nu D(sum_R c c' X X') + 2 nu D(v sum_tau c(tau) X^tau)`, `v(0) = u0`,
//!
//! with the unsquared sum over the ordered regular set `R`.

use crate::algebra::{CoefficientMap, TreeSymbol};
use crate::besov::{w_norm, DyadicPartition};
use crate::spectral::{pointwise_product, sup_norm, FourierField};
use crate::trajectory::Trajectory;
use crate::trees::EtdWeights;

use super::direct::nu_d_product;
use super::mild::mild_residual;
use super::picard::{etd_run, semigroup_extension, solve_slabs, SlabProblem};
use super::{EnhancedData, SlabRecord, SolverError, SolverOptions};

#[derive(Debug, Clone)]
pub struct SubcriticalState {
    pub v: Trajectory,
    pub coefficients: CoefficientMap,
    pub slabs: Vec<SlabRecord>,
    /// `sum_tau c(tau) X^tau`.
    pub tree_sum: Trajectory,
    /// Right-hand side at every node, evaluated on the accepted `v`.
    pub forcing: Trajectory,
    /// Distance between `v` and one more application of the discrete mild map.
    pub scheme_residual: f64,
    /// Re-integrated mild residual (quadratic interpolation of the forcing).
    pub mild_residual: f64,
}

impl SubcriticalState {
    /// `u = sum_tau c(tau) X^tau + v`.
    pub fn reconstruct(&self) -> Trajectory {
        self.tree_sum.axpy(1.0, &self.v).expect("shared grid").with_meta(crate::trajectory::TrajectoryMeta::Derived("u".into()))
    }
}

/// `sum_tau c(tau) X^tau` over the symbols of `x`; coefficients on symbols
/// absent from `x` are an error unless zero.
pub(crate) fn tree_sum(
    x: &EnhancedData,
    c: &CoefficientMap,
    skip: &[TreeSymbol],
) -> Result<Vec<FourierField>, SolverError> {
    for (s, &v) in c.iter() {
        if v != 0.0 && x.tree(s).is_none() {
            return Err(SolverError::MissingSymbol(s.name()));
        }
    }
    let mut out = vec![FourierField::zeros(x.grid()); x.times().len()];
    for s in x.symbols() {
        let cs = c.get(&s);
        if cs == 0.0 || skip.contains(&s) {
            continue;
        }
        for (o, f) in out.iter_mut().zip(x.get(&s)?.fields()) {
            o.add_assign_scaled(cs, f);
        }
    }
    Ok(out)
}

/// `nu D(sum c(t1) c(t2) X^t1 X^t2)` over the ordered regular set, leaving out
/// the pairs listed in `exclude`.
pub(crate) fn regular_products(
    x: &EnhancedData,
    c: &CoefficientMap,
    nu: f64,
    exclude: &[(TreeSymbol, TreeSymbol)],
) -> Result<Vec<FourierField>, SolverError> {
    let grid = x.grid();
    let mut sum = vec![FourierField::zeros(grid); x.times().len()];
    for e in x.regular_pairs()? {
        let (a, b) = &e.pair;
        let cc = c.get(a) * c.get(b);
        if cc == 0.0 || exclude.contains(&e.pair) {
            continue;
        }
        let (xa, xb) = (x.get(a)?, x.get(b)?);
        for (i, acc) in sum.iter_mut().enumerate() {
            acc.add_assign_scaled(cc, &pointwise_product(xa.field(i), xb.field(i))?);
        }
    }
    Ok(sum.iter().map(|f| crate::spectral::apply_derivative(f).scale(nu)).collect())
}

pub(crate) fn norm_s(x: &EnhancedData, opts: &SolverOptions) -> f64 {
    let p = x.params();
    opts.norm_s.unwrap_or(0.5 * (p.alpha + p.b))
}

struct Remainder {
    nu: f64,
    s: f64,
    partition: DyadicPartition,
    weights: EtdWeights,
    dt: f64,
    /// `2 sum c X`.
    twice_sum: Vec<FourierField>,
    regular: Vec<FourierField>,
}

impl Remainder {
    fn forcing(&self, i: usize, v: &FourierField) -> Result<FourierField, SolverError> {
        let mut g = nu_d_product(self.nu, v, &(v + &self.twice_sum[i]))?;
        g.add_assign_scaled(1.0, &self.regular[i]);
        Ok(g)
    }
}

impl SlabProblem for Remainder {
    type Node = FourierField;

    fn sweep(&mut self, _: &[FourierField], start: usize, guess: &[FourierField]) -> Result<Vec<FourierField>, SolverError> {
        let g = guess
            .iter()
            .enumerate()
            .map(|(i, v)| self.forcing(start + i, v))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(etd_run(&self.weights, &guess[0], &g))
    }

    fn extend(&self, from: &FourierField, _: usize, steps: usize) -> Vec<FourierField> {
        semigroup_extension(from, self.dt, steps)
    }

    fn distance(&self, a: &FourierField, b: &FourierField) -> f64 {
        w_norm(&(a - b), self.s, &self.partition)
    }

    fn size(&self, a: &FourierField) -> f64 {
        sup_norm(a)
    }
}

/// Solves on the nodes of `x` up to `t_end`.
pub fn solve_subcritical(
    x: &EnhancedData,
    c: &CoefficientMap,
    u0: &FourierField,
    t_end: f64,
    opts: &SolverOptions,
) -> Result<SubcriticalState, SolverError> {
    let params = x.params();
    if !params.subcritical() {
        return Err(SolverError::Precondition(format!(
            "2 alpha + b = {} is not positive",
            2.0 * params.alpha + params.b
        )));
    }
    let x = x.truncate(t_end);
    let grid = x.grid();
    u0.check_grid(&FourierField::zeros(grid))?;
    let dt = x.dt()?;
    let gamma = x.gamma();
    let sum = tree_sum(&x, c, &[])?;
    let mut problem = Remainder {
        nu: opts.nu,
        s: norm_s(&x, opts),
        partition: DyadicPartition::new(grid),
        weights: EtdWeights::new(grid, gamma, dt),
        dt,
        twice_sum: sum.iter().map(|f| f.scale(2.0)).collect(),
        regular: regular_products(&x, c, opts.nu, &[])?,
    };
    let (v, slabs) = solve_slabs(&mut problem, x.times(), u0.clone(), opts)?;
    let g = v.iter().enumerate().map(|(i, f)| problem.forcing(i, f)).collect::<Result<Vec<_>, _>>()?;
    let again = etd_run(&problem.weights, u0, &g);
    let scheme_residual = again.iter().zip(&v).map(|(a, b)| (a - b).l2_norm()).fold(0.0, f64::max);
    let template = x.get(&TreeSymbol::n())?;
    let v = Trajectory::derived("v", template, v);
    let forcing = Trajectory::derived("remainder forcing", template, g);
    let mild = if v.len() >= 3 { mild_residual(&v, &forcing, gamma)? } else { 0.0 };
    Ok(SubcriticalState {
        v,
        coefficients: c.clone(),
        slabs,
        tree_sum: Trajectory::derived("sum c X", template, sum),
        forcing,
        scheme_residual,
        mild_residual: mild,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::RegularityParams;
    use crate::spectral::Grid;
    use num_complex::Complex64;

    #[test]
    fn zero_data_and_zero_start_give_zero() {
        let g = Grid::new(16, 1.75).unwrap();
        let p = RegularityParams::new(-0.2, 0.5).unwrap();
        let x = EnhancedData::zero(g, 1.75, 1e-3, 0.05, p).unwrap();
        let s = solve_subcritical(&x, &CoefficientMap::solver_default(), &FourierField::zeros(g), 0.05, &SolverOptions::default()).unwrap();
        assert!(s.v.fields().iter().all(|f| f.is_zero()));
        assert_eq!(s.v.len(), 51);
    }

    #[test]
    fn supercritical_params_cannot_close() {
        // 2 alpha + b < 0 makes r(lr) + r(lr) negative, so lr·lr would be required
        let g = Grid::new(8, 1.75).unwrap();
        let p = RegularityParams::new(-0.3, 0.5).unwrap();
        assert!(matches!(EnhancedData::zero(g, 1.75, 1e-2, 0.05, p), Err(SolverError::MissingSymbol(_))));
    }

    #[test]
    fn slab_records_contract() {
        let g = Grid::new(16, 1.75).unwrap();
        let p = RegularityParams::new(-0.2, 0.5).unwrap();
        let x = EnhancedData::zero(g, 1.75, 1e-3, 0.2, p).unwrap();
        let u0 = FourierField::mode(g, 1, Complex64::new(0.5, 0.2));
        let s = solve_subcritical(&x, &CoefficientMap::solver_default(), &u0, 0.2, &SolverOptions::default()).unwrap();
        assert!(s.slabs.iter().all(|r| r.contraction < 1.0 && r.distance < 1e-9));
        assert!(s.scheme_residual < 1e-8);
        assert_eq!(s.v.field(0), &u0);
    }
}
