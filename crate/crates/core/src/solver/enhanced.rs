//! Tree-indexed driving data for the remainder solvers.

use std::collections::BTreeMap;

use crate::algebra::{regular_set, regularity, RegularSetEntry, RegularityParams, TreeSymbol};
use crate::besov::{estimate_space_time, NormRecord};
use crate::noise::{sample_y, NoiseConfig};
use crate::spectral::{FourierField, Grid};
use crate::trajectory::{uniform_times, Trajectory, TrajectoryMeta};
use crate::trees::{build_x_trees, Provenance, TreeTrajectory};

use super::SolverError;

/// `X^tau` for a family of symbols on a common time grid starting at `t = 0`.
#[derive(Debug, Clone)]
pub struct EnhancedData {
    trees: BTreeMap<TreeSymbol, TreeTrajectory>,
    params: RegularityParams,
    gamma: f64,
}

impl EnhancedData {
    /// Checks that the rough symbol `n` is present, that all trajectories share
    /// one time grid, and that every pair with `r(t1) + r(t2) < 0` has its
    /// product stored.
    pub fn new(trees: Vec<TreeTrajectory>, params: RegularityParams, gamma: f64) -> Result<Self, SolverError> {
        let map: BTreeMap<TreeSymbol, TreeTrajectory> = trees.into_iter().map(|t| (t.symbol.clone(), t)).collect();
        let star = TreeSymbol::n();
        let first = map.get(&star).ok_or_else(|| SolverError::MissingSymbol(star.name()))?;
        for t in map.values() {
            if !t.trajectory.same_times(&first.trajectory) {
                return Err(crate::trajectory::TrajectoryError::TimeGridMismatch.into());
            }
            if t.trajectory.grid() != first.trajectory.grid() {
                return Err(crate::trajectory::TrajectoryError::GridMismatch.into());
            }
        }
        for a in map.keys() {
            for b in map.keys() {
                if regularity(a, &params)? + regularity(b, &params)? < 0.0 {
                    let prod = TreeSymbol::product(a, b);
                    if !map.contains_key(&prod) {
                        return Err(SolverError::MissingSymbol(format!("{} (product of {} and {})", prod.name(), a, b)));
                    }
                }
            }
        }
        Ok(Self { trees: map, params, gamma })
    }

    /// `Y`, `X^lr`, `X^rLlr` from the noise of `config`, restricted to `t >= 0`.
    pub fn from_noise(config: &NoiseConfig, grid: Grid, params: RegularityParams) -> Result<Self, SolverError> {
        let y = sample_y(config, grid)?;
        Self::from_y(&y, config.gamma, params)
    }

    /// Builds the trees from a sampled `Y` (only its nodes with `t >= 0` are used).
    pub fn from_y(y: &Trajectory, gamma: f64, params: RegularityParams) -> Result<Self, SolverError> {
        let y0 = y.slice_from(0.0);
        let (xlr, xrllr) = build_x_trees(&y0, gamma)?;
        let yt = TreeTrajectory {
            symbol: TreeSymbol::n(),
            provenance: Provenance {
                parents: vec![],
                gamma,
                dt: y0.dt().unwrap_or(0.0),
                start: "stationary".into(),
                stationary_from: y0.time(0),
            },
            trajectory: y0,
        };
        Self::new(vec![yt, xlr, xrllr], params, gamma)
    }

    /// All three symbols identically zero on `[0, t_end]`.
    pub fn zero(grid: Grid, gamma: f64, dt: f64, t_end: f64, params: RegularityParams) -> Result<Self, SolverError> {
        let n = (t_end / dt).round() as usize + 1;
        let times = uniform_times(0.0, dt, n);
        let trees = [TreeSymbol::n(), TreeSymbol::lr(), TreeSymbol::rllr()]
            .into_iter()
            .map(|s| {
                let tr = Trajectory::new(times.clone(), vec![FourierField::zeros(grid); n], TrajectoryMeta::Derived("zero".into()))?;
                Ok(TreeTrajectory {
                    provenance: Provenance { parents: vec![], gamma, dt, start: "zero".into(), stationary_from: 0.0 },
                    symbol: s,
                    trajectory: tr,
                })
            })
            .collect::<Result<Vec<_>, SolverError>>()?;
        Self::new(trees, params, gamma)
    }

    pub fn params(&self) -> RegularityParams {
        self.params
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn grid(&self) -> Grid {
        self.trees.values().next().unwrap().trajectory.grid()
    }

    pub fn times(&self) -> &[f64] {
        self.trees.values().next().unwrap().trajectory.times()
    }

    pub fn dt(&self) -> Result<f64, SolverError> {
        Ok(self.trees.values().next().unwrap().trajectory.dt()?)
    }

    pub fn symbols(&self) -> Vec<TreeSymbol> {
        self.trees.keys().cloned().collect()
    }

    pub fn get(&self, sym: &TreeSymbol) -> Result<&Trajectory, SolverError> {
        self.trees.get(sym).map(|t| &t.trajectory).ok_or_else(|| SolverError::MissingSymbol(sym.name()))
    }

    pub fn tree(&self, sym: &TreeSymbol) -> Option<&TreeTrajectory> {
        self.trees.get(sym)
    }

    /// The regular set of the stored symbols.
    pub fn regular_pairs(&self) -> Result<Vec<RegularSetEntry>, SolverError> {
        Ok(regular_set(&self.symbols(), &self.params)?)
    }

    /// The data restricted to nodes `t <= t_end`.
    pub fn truncate(&self, t_end: f64) -> Self {
        let trees = self
            .trees
            .iter()
            .map(|(s, t)| {
                let n = t.trajectory.times().iter().take_while(|&&x| x <= t_end + 1e-12).count();
                let tr = Trajectory::new(
                    t.trajectory.times()[..n].to_vec(),
                    t.trajectory.fields()[..n].to_vec(),
                    t.trajectory.meta().clone(),
                )
                .expect("prefix of a valid trajectory");
                (s.clone(), TreeTrajectory { symbol: s.clone(), trajectory: tr, provenance: t.provenance.clone() })
            })
            .collect();
        Self { trees, params: self.params, gamma: self.gamma }
    }

    /// `W^{r(tau)}` estimates of every symbol.
    pub fn norm_records(&self) -> Result<BTreeMap<String, NormRecord>, SolverError> {
        let mut out = BTreeMap::new();
        for (s, t) in &self.trees {
            let r = regularity(s, &self.params)?;
            out.insert(s.name(), estimate_space_time(&t.trajectory, r, self.gamma));
        }
        Ok(out)
    }

    /// `max_tau ||X^tau||_{W^{r(tau)}}`, time part included.
    pub fn composite_norm(&self) -> Result<f64, SolverError> {
        Ok(self.norm_records()?.values().map(|r| r.total()).fold(0.0, f64::max))
    }

    /// `max_tau ||X^tau - Z^tau||_{W^{r(tau)}}`.
    pub fn difference_norm(&self, other: &EnhancedData) -> Result<f64, SolverError> {
        let mut best = 0.0f64;
        for (s, t) in &self.trees {
            let o = other.get(s)?;
            let d = t.trajectory.axpy(-1.0, o)?;
            let r = regularity(s, &self.params)?;
            best = best.max(estimate_space_time(&d, r, self.gamma).total());
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants_are_enforced() {
        let g = Grid::new(8, 1.75).unwrap();
        let p = RegularityParams::new(-0.2, 0.5).unwrap();
        let z = EnhancedData::zero(g, 1.75, 0.01, 0.1, p).unwrap();
        assert_eq!(z.times().len(), 11);
        assert_eq!(z.regular_pairs().unwrap().len(), 6);
        // dropping lr violates the product requirement for (n, n)
        let only_n = vec![z.tree(&TreeSymbol::n()).unwrap().clone()];
        assert!(matches!(EnhancedData::new(only_n, p, 1.75), Err(SolverError::MissingSymbol(_))));
        let cfg = NoiseConfig::new(1.75, 0.25, 1, 0.01, 0.1);
        let x = EnhancedData::from_noise(&cfg, g, p).unwrap();
        assert!(x.get(&TreeSymbol::lr()).unwrap().field(0).is_zero());
        assert!(x.composite_norm().unwrap() > 0.0);
        assert_eq!(x.difference_norm(&x).unwrap(), 0.0);
    }
}
