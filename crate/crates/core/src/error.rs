use alloc::boxed::Box;
use alloc::string::String;

use crate::solvers::FittedSolution;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("anchors are not unisolvent: |2*area| = {area:e} is below {threshold:e}")]
    Unisolvent { area: f64, threshold: f64 },

    #[error("gram matrix is singular: {0}")]
    Singular(String),

    #[error("no convergence after {iterations} iterations (optimality gap {gap:e})")]
    NoConvergence {
        iterations: usize,
        gap: f64,
        best: Box<FittedSolution>,
    },

    #[error("norm bound {bound} is smaller than the solution norm {norm_sq}")]
    BoundTooSmall { bound: f64, norm_sq: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("instance of size {n} exceeds the oracle limit of {max}")]
    InstanceTooLarge { n: usize, max: usize },

    #[error("uncertainty set is unbounded")]
    Unbounded,
}
