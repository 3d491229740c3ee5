//! Mild-formulation solvers for the mollified equation, the subcritical
//! remainder equation and the paracontrolled system, with stability diagnostics.
//!
//! Throughout, `L = d/dt + Lambda^gamma` and the nonlinearity is `nu D(u^2)`
//! with `nu = 1/2` by default.

mod diagnostics;
mod direct;
mod enhanced;
mod mild;
mod paracontrolled;
mod picard;
mod studies;
mod subcritical;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::AlgebraError;
use crate::besov::BesovError;
use crate::noise::NoiseError;
use crate::spectral::SpectralError;
use crate::trajectory::TrajectoryError;
use crate::trees::TreeError;

pub use diagnostics::*;
pub use direct::*;
pub use enhanced::*;
pub use mild::*;
pub use paracontrolled::*;
pub use studies::*;
pub use subcritical::*;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("blow-up at t = {t}: norm {value:e} exceeds the ceiling")]
    BlowupDetected { t: f64, value: f64 },
    #[error("no contraction on the slab starting at t = {t} (length {slab}, last factor {factor})")]
    NoContraction { t: f64, slab: f64, factor: f64 },
    #[error("Mittag-Leffler order must be positive, got {0}")]
    NonpositiveOrder(f64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("enhanced data has no symbol {0}")]
    MissingSymbol(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Besov(#[from] BesovError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Knobs shared by the three solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Coefficient `nu` of `nu D(u^2)`.
    pub nu: f64,
    /// Picard stopping threshold on the successive-iterate distance.
    pub tol: f64,
    pub max_iter: usize,
    /// First slab length; later slabs adapt to the observed contraction.
    pub initial_slab: f64,
    /// Slabs shorter than this many steps are not attempted.
    pub min_slab_steps: usize,
    /// Ceiling on the sup norm that signals blow-up.
    pub blowup_ceiling: f64,
    /// Smoothness `s` of the `W^s` distance; `None` uses `(alpha + b)/2`.
    pub norm_s: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            nu: 0.5,
            tol: 1e-9,
            max_iter: 50,
            initial_slab: 0.1,
            min_slab_steps: 8,
            blowup_ceiling: 1e6,
            norm_s: None,
        }
    }
}

/// Picard record of one accepted slab.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlabRecord {
    pub t0: f64,
    pub t1: f64,
    pub iterations: usize,
    /// Ratio of the last two successive-iterate distances.
    pub contraction: f64,
    pub distance: f64,
}
