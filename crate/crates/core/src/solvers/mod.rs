//! Minimum-norm solvers over convex uncertainty sets.
//!
//! Every solver returns the element `x` of the admissible set with the
//! smallest `x^T K^-1 x` together with `h = K^-1 x`. Optimality is certified by
//! the variational inequality `h^T x <= h^T x'` for all admissible `x'`; the
//! reported gap is `h^T x - min_{x' in C} h^T x'`, computed from the linear
//! minimization over the set and nothing else.

mod box_qp;
mod certificate;
mod eigenbox;
mod l1;
mod pgd;
mod sets;
mod smoothing;

use alloc::boxed::Box;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::gram::GramMatrix;

pub use box_qp::{small_delta_bound, solve_box};
pub use certificate::{optimality_gap, verify_optimality};
pub use eigenbox::{pseudo_inverse_reconstruct, solve_eigenbox};
pub use l1::solve_l1ball;
pub use pgd::solve_pgd;
pub use sets::{project_l1, EigenInterval, Region, UncertaintySpec};
pub use smoothing::{implied_delta, smoothing_spline, solve_l2ball};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Optimality tolerance on the gap, relative to `max(1, norm_sq)`.
    pub tol: f64,
    /// Absolute tolerance for membership in the admissible set.
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Upper bound `M` on the squared norm of admissible functions.
    pub norm_bound: Option<f64>,
    /// Nesterov acceleration for the projected-gradient path.
    pub momentum: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            feas_tol: 1e-9,
            max_iter: 200_000,
            norm_bound: None,
            momentum: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Interpolation,
    Trivial,
    ActiveSet,
    SmoothingSpline,
    Clipping,
    EigenClamp,
    PseudoInverse,
    ProjectedGradient,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Interpolation => "interpolation",
            Method::Trivial => "trivial",
            Method::ActiveSet => "active-set",
            Method::SmoothingSpline => "smoothing-spline",
            Method::Clipping => "clipping",
            Method::EigenClamp => "eigen-clamp",
            Method::PseudoInverse => "pseudo-inverse",
            Method::ProjectedGradient => "projected-gradient",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: Method,
    /// Variational-inequality gap `h^T x - min_{x' in C} h^T x'`.
    pub gap: f64,
    /// Smoothing parameter (l2 ball and smoothing spline).
    pub lambda: Option<f64>,
    /// Radius implied by `lambda` (smoothing spline).
    pub implied_delta: Option<f64>,
    /// Clipping threshold (diagonal l1 ball).
    pub tau: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `M - norm_sq`, the worst-case squared error, when `M` was given.
    pub worst_case_error: Option<f64>,
    /// The origin was admissible, so the solution is zero.
    pub trivial: bool,
    /// Whether the largest box half-width is below the sign-stability bound
    /// `min|K^-1 z| / max_j sum_n |(K^-1)_jn|` (box sets only).
    pub small_delta_condition: Option<bool>,
}

impl SolveReport {
    pub(crate) fn new(method: Method) -> Self {
        Self {
            method,
            gap: 0.0,
            lambda: None,
            implied_delta: None,
            tau: None,
            iterations: 0,
            converged: false,
            worst_case_error: None,
            trivial: false,
            small_delta_condition: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedSolution {
    /// Fitted observation values, an element of the admissible set.
    pub x_hat: DVector<f64>,
    /// Kernel coefficients `K^-1 x_hat`.
    pub h_hat: DVector<f64>,
    /// `x^T K^-1 x = h^T x`, the squared RKHS norm of the reconstruction.
    pub norm_sq: f64,
    pub report: SolveReport,
}

/// `M - norm_sq`: the largest squared error any admissible function can have
/// against the robust reconstruction.
pub fn worst_case_error(norm_sq: f64, bound: f64) -> Result<f64> {
    if !(bound >= norm_sq) {
        return Err(Error::BoundTooSmall { bound, norm_sq });
    }
    Ok(bound - norm_sq)
}

/// Minimum-norm element of the set described by `spec`.
pub fn solve(g: &GramMatrix, spec: &UncertaintySpec, opts: &SolveOptions) -> Result<FittedSolution> {
    spec.validate(g.dim())?;
    match &spec.region {
        Region::Point => interpolate(g, spec, opts),
        Region::Box { deltas } => solve_box(g, &spec.center, deltas, opts),
        Region::L2Ball { delta } => solve_l2ball(g, &spec.center, *delta, opts),
        Region::L1Ball { delta } => solve_l1ball(g, &spec.center, *delta, opts),
        Region::EigenBox { intervals } => solve_eigenbox(g, &spec.center, intervals, opts),
    }
}

pub(crate) fn interpolate(g: &GramMatrix, spec: &UncertaintySpec, opts: &SolveOptions) -> Result<FittedSolution> {
    if spec.contains_origin(g) {
        return trivial(g, spec, opts);
    }
    let h = g.solve(&spec.center);
    finish(g, spec, spec.center.clone(), h, SolveReport::new(Method::Interpolation), opts)
}

pub(crate) fn trivial(g: &GramMatrix, spec: &UncertaintySpec, opts: &SolveOptions) -> Result<FittedSolution> {
    let n = g.dim();
    let mut report = SolveReport::new(Method::Trivial);
    report.trivial = true;
    finish(g, spec, DVector::zeros(n), DVector::zeros(n), report, opts)
}

pub(crate) fn gap_threshold(opts: &SolveOptions, norm_sq: f64) -> f64 {
    opts.tol * norm_sq.max(1.0)
}

/// Fills in the norm, the certificate and the worst-case error; fails with
/// `NoConvergence` when the certificate does not meet the tolerance.
pub(crate) fn finish(
    g: &GramMatrix,
    spec: &UncertaintySpec,
    x_hat: DVector<f64>,
    h_hat: DVector<f64>,
    mut report: SolveReport,
    opts: &SolveOptions,
) -> Result<FittedSolution> {
    let norm_sq = h_hat.dot(&x_hat).max(0.0);
    report.gap = optimality_gap(g, spec, &x_hat, &h_hat);
    report.converged = report.gap <= gap_threshold(opts, norm_sq);
    if let Some(m) = opts.norm_bound {
        report.worst_case_error = Some(worst_case_error(norm_sq, m)?);
    }
    let sol = FittedSolution {
        x_hat,
        h_hat,
        norm_sq,
        report,
    };
    if sol.report.converged {
        Ok(sol)
    } else {
        Err(Error::NoConvergence {
            iterations: sol.report.iterations,
            gap: sol.report.gap,
            best: Box::new(sol),
        })
    }
}
