//! Experiment runner for the gfsb laboratory: spec files, the per-kind
//! experiments, artifact persistence and the command-line front end.

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod outcome;
pub mod persist;
pub mod spec;

use thiserror::Error;

pub use manifest::{emit_plot_data, run, run_with_threads, RunManifest, TaskStatus};
pub use spec::{ExperimentKind, ExperimentSpec, Params};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid spec: {0}")]
    Validation(String),
    #[error("task `{task}` failed: {message}")]
    TaskFailure { task: String, message: String, manifest: Box<RunManifest> },
    #[error("incomplete manifest: {0}")]
    IncompleteManifest(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Solver(#[from] gfsb_core::solver::SolverError),
    #[error(transparent)]
    Tree(#[from] gfsb_core::trees::TreeError),
    #[error(transparent)]
    Noise(#[from] gfsb_core::noise::NoiseError),
    #[error(transparent)]
    Besov(#[from] gfsb_core::besov::BesovError),
    #[error(transparent)]
    Spectral(#[from] gfsb_core::spectral::SpectralError),
    #[error(transparent)]
    Algebra(#[from] gfsb_core::algebra::AlgebraError),
}
