//! One module per experiment kind. Every experiment reads its resolved
//! parameters, draws randomness only from the spec's base seed and reports
//! through an [`Outcome`].

mod algebra;
mod appendix;
mod consistency;
mod covariance;
mod dependence;
mod eps;
mod identity;
mod ladder;

use crate::outcome::Outcome;
use crate::spec::{ExperimentKind, ExperimentSpec, Params};
use crate::HarnessError;

pub use algebra::{tree_algebra_report, TreeAlgebraReport};
pub use covariance::{ou_covariance_rows, CovarianceRow};
pub use identity::{identity_report, IdentityReport};

pub fn execute(spec: &ExperimentSpec, params: &Params) -> Result<Outcome, HarnessError> {
    let seed = spec.seed();
    let out = match spec.kind {
        ExperimentKind::IdentitySuite => identity::run(params, seed),
        ExperimentKind::Covariance => covariance::run(params, seed),
        ExperimentKind::RegularityLadder => ladder::run(params, seed),
        ExperimentKind::EpsConvergence => eps::run(params, seed),
        ExperimentKind::SolverConsistency => consistency::run(params, seed),
        ExperimentKind::DependenceProbe => dependence::run(params, seed),
        ExperimentKind::TreeAlgebraAudit => algebra::run(params),
        ExperimentKind::AppendixIntegrals => appendix::run(params),
    }?;
    Ok(out.finish())
}

/// Rows of `(index, value)` for a plot series.
fn indexed(values: &[f64]) -> Vec<(f64, f64)> {
    values.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect()
}

fn positive_count(params: &Params, key: &str) -> Result<usize, HarnessError> {
    let n = params.count(key)?;
    if n == 0 {
        return Err(HarnessError::Validation(format!("{key} must be positive")));
    }
    Ok(n)
}
