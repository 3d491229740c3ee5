//! Slab-wise Picard iteration shared by the remainder solvers.
//!
//! On each slab the whole trajectory is iterated at once (Jacobi sweeps): the
//! forcing is evaluated on the previous iterate at every node and re-integrated
//! with the same exponential-integrator recursion as the direct solver, so the
//! fixed point is the discrete solution of the implicit scheme.

use crate::spectral::FourierField;
use crate::trees::EtdWeights;

use super::{SlabRecord, SolverError, SolverOptions};

pub(crate) trait SlabProblem {
    type Node: Clone;

    /// New iterate on nodes `start..=start + guess.len() - 1`, where
    /// `accepted` holds the solution on nodes `0..=start` and `guess[0]`
    /// equals `accepted[start]`.
    fn sweep(&mut self, accepted: &[Self::Node], start: usize, guess: &[Self::Node]) -> Result<Vec<Self::Node>, SolverError>;

    /// Initial guess for `steps` steps past `from`.
    fn extend(&self, from: &Self::Node, start: usize, steps: usize) -> Vec<Self::Node>;

    fn distance(&self, a: &Self::Node, b: &Self::Node) -> f64;

    /// Quantity compared against the blow-up ceiling.
    fn size(&self, a: &Self::Node) -> f64;
}

pub(crate) fn solve_slabs<P: SlabProblem>(
    problem: &mut P,
    times: &[f64],
    initial: P::Node,
    opts: &SolverOptions,
) -> Result<(Vec<P::Node>, Vec<SlabRecord>), SolverError> {
    let n_total = times.len();
    let dt = if n_total > 1 { times[1] - times[0] } else { 1.0 };
    let mut accepted = vec![initial];
    let mut records = Vec::new();
    let mut slab = opts.initial_slab;
    let floor = opts.min_slab_steps.max(1);
    while accepted.len() < n_total {
        let start = accepted.len() - 1;
        let remaining = n_total - 1 - start;
        loop {
            let wanted = ((slab / dt).round() as usize).max(floor);
            let steps = wanted.min(remaining);
            let mut guess = problem.extend(&accepted[start], start, steps);
            let mut prev = f64::INFINITY;
            let mut factor = 0.0;
            let mut outcome = None;
            for it in 1..=opts.max_iter {
                let next = problem.sweep(&accepted, start, &guess)?;
                let d = next.iter().zip(&guess).map(|(a, b)| problem.distance(a, b)).fold(0.0, f64::max);
                if prev.is_finite() && prev > 0.0 {
                    factor = d / prev;
                }
                guess = next;
                if !d.is_finite() {
                    factor = f64::INFINITY;
                    break;
                }
                if d < opts.tol {
                    outcome = Some((it, d));
                    break;
                }
                if it >= 3 && factor >= 1.0 {
                    break;
                }
                prev = d;
            }
            if let Some((iterations, distance)) = outcome {
                for (i, node) in guess.iter().enumerate().skip(1) {
                    let s = problem.size(node);
                    if !(s <= opts.blowup_ceiling) {
                        return Err(SolverError::BlowupDetected { t: times[start + i], value: s });
                    }
                }
                records.push(SlabRecord {
                    t0: times[start],
                    t1: times[start + steps],
                    iterations,
                    contraction: factor,
                    distance,
                });
                accepted.extend(guess.into_iter().skip(1));
                if factor > 0.5 {
                    slab = (steps as f64 * dt) / 2.0;
                } else if factor < 0.1 {
                    slab = (steps as f64 * dt * 2.0).min(opts.initial_slab);
                }
                break;
            }
            if steps <= floor {
                return Err(SolverError::NoContraction { t: times[start], slab: steps as f64 * dt, factor });
            }
            slab = (steps as f64 * dt) / 2.0;
        }
    }
    Ok((accepted, records))
}

/// `v_{i+1} = decay v_i + w0 g_i + w1 g_{i+1}` from `v0`.
pub(crate) fn etd_run(
    wts: &EtdWeights,
    v0: &FourierField,
    g: &[FourierField],
) -> Vec<FourierField> {
    let mut out = Vec::with_capacity(g.len());
    out.push(v0.clone());
    for i in 0..g.len() - 1 {
        let next = wts.step(&out[i], &g[i], &g[i + 1]);
        out.push(next);
    }
    out
}

/// `P(i dt) f` for `i = 0..=steps`.
pub(crate) fn semigroup_extension(
    f: &FourierField,
    dt: f64,
    steps: usize,
) -> Vec<FourierField> {
    let grid = f.grid();
    let decay: Vec<f64> = (1..=grid.n_modes()).map(|k| (-dt * grid.rate(k)).exp()).collect();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(f.clone());
    for i in 0..steps {
        let next = out[i].multiply(|k| decay[k - 1]);
        out.push(next);
    }
    out
}
