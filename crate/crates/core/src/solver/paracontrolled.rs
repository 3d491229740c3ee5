//! Paracontrolled system for `alpha + b > 0`.
//!
//! The remainder is split as `v = u' ⪻ Q + u#` with `u' = c(tau_m) X^{tau_m} + v`,
//! `tau_m = n · tau_down`, and `L Q = 2 nu c(n) D Y`, `Q(0) = 0`. The rough
//! product `2 nu c(n) D(u' Y)` is expanded as
//!
//! `2 nu c(n) ([D(u' ≺ Y) - u' ≺ DY] + u' ≺ DY + D(v ∘ Y + v ≻ Y) + c(tau_m) D(Z ∘ Y + Z ≻ Y))`,
//!
//! i.e. commutator, the `K` part, `J` and `I`. The `K` operator also carries
//! `-L(u' ⪻ Q)`, which in the mild form is `-(f_{n+1} - e^{-h|k|^gamma} f_n)` per
//! step with `f = u' ⪻ Q`; this keeps the discrete fixed point identical to the
//! one of the subcritical scheme.

use serde::Serialize;

use crate::algebra::{CoefficientMap, TreeSymbol};
use crate::besov::{bony_decompose, modified_paraproduct_at, w_norm, DyadicPartition, TimeMollifierBank};
use crate::spectral::{apply_derivative, sup_norm, FourierField};
use crate::trajectory::Trajectory;
use crate::trees::{duhamel_from_first_node, EtdWeights};

use super::mild::mild_residual;
use super::picard::{semigroup_extension, solve_slabs, SlabProblem};
use super::subcritical::{norm_s, regular_products, tree_sum};
use super::{EnhancedData, SlabRecord, SolverError, SolverOptions};

/// Choice of the operators `I`, `J`, `K` (the `M` and `X~` slots are zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OperatorBundle {
    /// `I = 2 nu c(n) c(tau_m) D(Z ∘ Y + Z ≻ Y)`, `J = 2 nu c(n) D(v ∘ Y + v ≻ Y)`,
    /// `K = 2 nu c(n) u' ≺ DY - L(u' ⪻ Q)`.
    Default,
    /// `I = J = K = 0`; only the commutator remains.
    Zero,
}

impl OperatorBundle {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "default" => Some(Self::Default),
            "zero" => Some(Self::Zero),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParacontrolledState {
    pub u_prime: Trajectory,
    pub u_sharp: Trajectory,
    pub q: Trajectory,
    /// `u' ⪻ Q + u#`.
    pub u_q: Trajectory,
    pub tau_m: TreeSymbol,
    pub bundle: OperatorBundle,
    pub slabs: Vec<SlabRecord>,
    /// `sum_tau c(tau) X^tau`.
    pub tree_sum: Trajectory,
    /// `max_n ||u' - c(tau_m) X^{tau_m} - u' ⪻ Q - u#||_{L^2}`.
    pub ansatz_residual: f64,
    /// Re-integrated mild residual of `u_q` (of `u#` for the zero bundle).
    pub mild_residual: f64,
    /// `sup_t (||u'||_{W^s} + 2 ||u#||_{W^{2s}})`.
    pub blowup_functional: f64,
}

impl ParacontrolledState {
    /// `u = sum_tau c(tau) X^tau + u' ⪻ Q + u#`.
    pub fn reconstruct(&self) -> Trajectory {
        self.tree_sum.axpy(1.0, &self.u_q).expect("shared grid").with_meta(crate::trajectory::TrajectoryMeta::Derived("u".into()))
    }
}

/// The symbol `tau_m = n · tau_down` of `x` with `(n, tau_m)` regular.
pub fn find_tau_m(x: &EnhancedData) -> Result<TreeSymbol, SolverError> {
    let star = TreeSymbol::n();
    let regular = x.regular_pairs()?;
    let syms = x.symbols();
    syms.iter()
        .filter(|t| syms.iter().any(|d| TreeSymbol::product(&star, d) == **t))
        .filter(|t| regular.iter().any(|e| e.pair == (star.clone(), (*t).clone())))
        .max()
        .cloned()
        .ok_or_else(|| SolverError::Precondition("no symbol n·tau with (n, n·tau) in the regular set".into()))
}

#[derive(Clone)]
struct Node {
    u_prime: FourierField,
    u_sharp: FourierField,
}

struct System {
    nu: f64,
    bundle: OperatorBundle,
    s: f64,
    c_n: f64,
    c_m: f64,
    dt: f64,
    partition: DyadicPartition,
    bank: TimeMollifierBank,
    weights: EtdWeights,
    y: Vec<FourierField>,
    dy: Vec<FourierField>,
    q: Vec<FourierField>,
    z: Vec<FourierField>,
    /// `2 S'` with `S' = sum_{tau != n} c(tau) X^tau`.
    twice_rest: Vec<FourierField>,
    /// Regular products without the `(n, tau_m)` pairs, plus `I` when enabled.
    static_forcing: Vec<FourierField>,
    /// `u'` on all accepted nodes followed by the current guess.
    history: Vec<FourierField>,
}

impl System {
    fn paraproduct_q(&self, n: usize) -> Result<FourierField, SolverError> {
        Ok(modified_paraproduct_at(&self.history, &self.q[n], n, self.dt, &self.bank, &self.partition)?)
    }

    /// Forcing of `v` at node `i` given `u'` and `v = u' ⪻ Q + u#`.
    fn forcing(&self, i: usize, u_prime: &FourierField, v: &FourierField) -> Result<FourierField, SolverError> {
        let k = 2.0 * self.nu * self.c_n;
        let mut g = apply_derivative(&crate::spectral::pointwise_product(v, &(v + &self.twice_rest[i]))?).scale(self.nu);
        g.add_assign_scaled(1.0, &self.static_forcing[i]);
        if k != 0.0 {
            let para_y = bony_decompose(u_prime, &self.y[i], &self.partition)?.para;
            let para_dy = bony_decompose(u_prime, &self.dy[i], &self.partition)?.para;
            // commutator [D, u' ≺] Y
            g.add_assign_scaled(k, &apply_derivative(&para_y));
            g.add_assign_scaled(-k, &para_dy);
            if self.bundle == OperatorBundle::Default {
                g.add_assign_scaled(k, &para_dy);
                let b = bony_decompose(v, &self.y[i], &self.partition)?;
                g.add_assign_scaled(k, &apply_derivative(&(&b.reso + &b.anti)));
            }
        }
        Ok(g)
    }

    fn weighted_norm(&self, n: &Node) -> f64 {
        w_norm(&n.u_prime, self.s, &self.partition) + 2.0 * w_norm(&n.u_sharp, 2.0 * self.s, &self.partition)
    }
}

impl SlabProblem for System {
    type Node = Node;

    fn sweep(&mut self, _: &[Node], start: usize, guess: &[Node]) -> Result<Vec<Node>, SolverError> {
        self.history.truncate(start + 1);
        self.history.extend(guess.iter().skip(1).map(|n| n.u_prime.clone()));
        let f = (0..guess.len()).map(|i| self.paraproduct_q(start + i)).collect::<Result<Vec<_>, _>>()?;
        let g = guess
            .iter()
            .zip(&f)
            .enumerate()
            .map(|(i, (n, fi))| self.forcing(start + i, &n.u_prime, &(fi + &n.u_sharp)))
            .collect::<Result<Vec<_>, _>>()?;
        let mut out = Vec::with_capacity(guess.len());
        out.push(guess[0].clone());
        for i in 0..guess.len() - 1 {
            let mut sharp = self.weights.step(&out[i].u_sharp, &g[i], &g[i + 1]);
            if self.bundle == OperatorBundle::Default {
                // - int P L(u' ⪻ Q) over the step
                sharp.add_assign_scaled(-1.0, &f[i + 1]);
                sharp.add_assign_scaled(1.0, &f[i].multiply(|k| self.weights.decay[k - 1]));
            }
            let mut up = &self.z[start + i + 1] * self.c_m;
            up.add_assign_scaled(1.0, &f[i + 1]);
            up.add_assign_scaled(1.0, &sharp);
            out.push(Node { u_prime: up, u_sharp: sharp });
        }
        Ok(out)
    }

    fn extend(&self, from: &Node, start: usize, steps: usize) -> Vec<Node> {
        let v0 = &from.u_prime - &(&self.z[start] * self.c_m);
        let v = semigroup_extension(&v0, self.dt, steps);
        let sharp = semigroup_extension(&from.u_sharp, self.dt, steps);
        v.into_iter()
            .zip(sharp)
            .enumerate()
            .map(|(i, (vi, si))| {
                if i == 0 {
                    from.clone()
                } else {
                    Node { u_prime: &vi + &(&self.z[start + i] * self.c_m), u_sharp: si }
                }
            })
            .collect()
    }

    fn distance(&self, a: &Node, b: &Node) -> f64 {
        w_norm(&(&a.u_prime - &b.u_prime), self.s, &self.partition)
            .max(w_norm(&(&a.u_sharp - &b.u_sharp), 2.0 * self.s, &self.partition))
    }

    fn size(&self, a: &Node) -> f64 {
        sup_norm(&a.u_prime) + 2.0 * sup_norm(&a.u_sharp)
    }
}

pub fn solve_paracontrolled(
    x: &EnhancedData,
    c: &CoefficientMap,
    u0: &FourierField,
    bundle: OperatorBundle,
    t_end: f64,
    opts: &SolverOptions,
) -> Result<ParacontrolledState, SolverError> {
    let params = x.params();
    if !params.subcritical_usable() {
        return Err(SolverError::Precondition(format!("alpha + b = {} is not positive", params.alpha + params.b)));
    }
    let x = x.truncate(t_end);
    let tau_m = find_tau_m(&x)?;
    let star = TreeSymbol::n();
    let grid = x.grid();
    u0.check_grid(&FourierField::zeros(grid))?;
    let gamma = x.gamma();
    let dt = x.dt()?;
    let nu = opts.nu;
    let (c_n, c_m) = (c.get(&star), c.get(&tau_m));
    let y_tr = x.get(&star)?;
    let y = y_tr.fields().to_vec();
    let dy: Vec<FourierField> = y.iter().map(apply_derivative).collect();
    let q_forcing = Trajectory::derived("2 nu c(n) DY", y_tr, dy.iter().map(|f| f.scale(2.0 * nu * c_n)).collect());
    let q = duhamel_from_first_node(&q_forcing, gamma)?;
    let z = x.get(&tau_m)?.fields().to_vec();
    let partition = DyadicPartition::new(grid);
    let mut static_forcing = regular_products(&x, c, nu, &[(star.clone(), tau_m.clone()), (tau_m.clone(), star.clone())])?;
    let k = 2.0 * nu * c_n * c_m;
    if bundle == OperatorBundle::Default && k != 0.0 {
        for (i, sf) in static_forcing.iter_mut().enumerate() {
            let b = bony_decompose(&z[i], &y[i], &partition)?;
            sf.add_assign_scaled(k, &apply_derivative(&(&b.reso + &b.anti)));
        }
    }
    let rest = tree_sum(&x, c, &[star.clone()])?;
    let mut system = System {
        nu,
        bundle,
        s: norm_s(&x, opts),
        c_n,
        c_m,
        dt,
        partition,
        bank: TimeMollifierBank::new(gamma),
        weights: EtdWeights::new(grid, gamma, dt),
        y,
        dy,
        q: q.fields().to_vec(),
        z,
        twice_rest: rest.iter().map(|f| f.scale(2.0)).collect(),
        static_forcing,
        history: Vec::new(),
    };
    // Q(0) = 0, so u'(0) = c(tau_m) Z(0) + u0 and u#(0) = u0
    let first = Node { u_prime: &(&system.z[0] * c_m) + u0, u_sharp: u0.clone() };
    system.history.push(first.u_prime.clone());
    let (nodes, slabs) = solve_slabs(&mut system, x.times(), first, opts)?;
    system.history = nodes.iter().map(|n| n.u_prime.clone()).collect();
    let mut f = Vec::with_capacity(nodes.len());
    let mut ansatz = 0.0f64;
    let mut functional = 0.0f64;
    for (i, n) in nodes.iter().enumerate() {
        let fi = system.paraproduct_q(i)?;
        let r = &(&(&n.u_prime - &(&system.z[i] * c_m)) - &fi) - &n.u_sharp;
        ansatz = ansatz.max(r.l2_norm());
        functional = functional.max(system.weighted_norm(n));
        f.push(fi);
    }
    let u_q: Vec<FourierField> = f.iter().zip(&nodes).map(|(a, n)| a + &n.u_sharp).collect();
    let g = nodes
        .iter()
        .zip(&u_q)
        .enumerate()
        .map(|(i, (n, v))| system.forcing(i, &n.u_prime, v))
        .collect::<Result<Vec<_>, _>>()?;
    let forcing = Trajectory::derived("paracontrolled forcing", y_tr, g);
    let u_q = Trajectory::derived("u' ⪻ Q + u#", y_tr, u_q);
    let u_sharp = Trajectory::derived("u#", y_tr, nodes.iter().map(|n| n.u_sharp.clone()).collect());
    let mild = if u_q.len() < 3 {
        0.0
    } else if bundle == OperatorBundle::Default {
        mild_residual(&u_q, &forcing, gamma)?
    } else {
        mild_residual(&u_sharp, &forcing, gamma)?
    };
    Ok(ParacontrolledState {
        u_prime: Trajectory::derived("u'", y_tr, nodes.into_iter().map(|n| n.u_prime).collect()),
        u_sharp,
        q: q.with_meta(crate::trajectory::TrajectoryMeta::Derived("Q".into())),
        u_q,
        tau_m,
        bundle,
        slabs,
        tree_sum: Trajectory::derived("sum c X", y_tr, tree_sum(&x, c, &[])?),
        ansatz_residual: ansatz,
        mild_residual: mild,
        blowup_functional: functional,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::RegularityParams;
    use crate::spectral::Grid;

    #[test]
    fn tau_m_is_rllr() {
        let g = Grid::new(8, 1.75).unwrap();
        let p = RegularityParams::new(-0.2, 0.5).unwrap();
        let x = EnhancedData::zero(g, 1.75, 1e-2, 0.05, p).unwrap();
        assert_eq!(find_tau_m(&x).unwrap(), TreeSymbol::rllr());
        // Y alone: n·n is not stored
        let only = EnhancedData::new(
            vec![x.tree(&TreeSymbol::n()).unwrap().clone()],
            RegularityParams::new(0.1, 0.5).unwrap(),
            1.75,
        )
        .unwrap();
        assert!(matches!(find_tau_m(&only), Err(SolverError::Precondition(_))));
    }
}
