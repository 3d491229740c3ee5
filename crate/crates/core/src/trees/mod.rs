//! Gaussian trees built from the stochastic convolution, together with the
//! analytic oracles used to check them: Wick pairings, closed-form covariance
//! kernels, exponential-integral bounds and summability diagnostics.

mod appendix;
mod build;
mod duhamel;
mod kernels;
mod summability;
mod wick;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::TreeSymbol;
use crate::noise::NoiseError;
use crate::spectral::SpectralError;
use crate::trajectory::{Trajectory, TrajectoryError};

pub use appendix::*;
pub use build::*;
pub use duhamel::*;
pub use kernels::*;
pub use summability::*;
pub use wick::*;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("burn-in window {have} shorter than required {needed}")]
    InsufficientBurnIn { needed: f64, have: f64 },
    #[error("no construction for symbol {0}")]
    UnknownSymbol(String),
    #[error("odd number of Gaussian factors")]
    OddMomentCount,
    #[error("kernel needs k != 0")]
    ZeroModeK,
    #[error("domain error: {0}")]
    DomainError(String),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    /// Names of the trajectories the tree was built from.
    pub parents: Vec<String>,
    pub gamma: f64,
    pub dt: f64,
    /// `"stationary"` (window started in the past) or `"zero"` (vanishes at `t = 0`).
    pub start: String,
    /// First time from which the stationary construction is accurate.
    pub stationary_from: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeTrajectory {
    pub symbol: TreeSymbol,
    pub trajectory: Trajectory,
    pub provenance: Provenance,
}

impl TreeTrajectory {
    pub fn name(&self) -> String {
        self.symbol.name()
    }
}
