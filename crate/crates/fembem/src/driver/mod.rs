//! Solvers, experiment harness and result emission.

pub mod config;
pub mod experiments;
pub mod output;
pub mod solver;

pub use config::{
    CoefficientPreset, ControlRun, Criteria, DegreeRule, Experiment, ExperimentConfig, GeometryPreset, Resolution,
};
pub use experiments::{
    discretize, fit_exponent, run_calderon, run_continuity_experiment, run_convergence_study, run_experiment,
    run_filters, run_garding_experiment, run_inverse_inequality, run_jumps, run_quasioptimality_sweep,
    run_adjoint_consistency, Setup,
};
pub use output::{emit_results, from_csv, svg_plot, to_csv, Check, Format, Plot, Report, RunRecord, Series, Timings};
pub use solver::{solve_system, Solution, SolverError, SolverKind, SparseLu};

use crate::assembly::AssemblyError;
use crate::bem::BemError;
use crate::discretization::DiscretizationError;
use crate::geometry::GeometryError;
use crate::norms::NormError;
use crate::reference::ReferenceError;

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no records to emit")]
    Empty,
    #[error("csv: {0}")]
    Csv(String),
    #[error("{context}: {source}")]
    Solver { context: String, source: SolverError },
    #[error("singular {0}")]
    Singular(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Bem(#[from] BemError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Reference(#[from] ReferenceError),
}
