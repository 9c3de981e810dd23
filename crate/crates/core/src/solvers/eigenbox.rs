//! Interval sets in the eigenbasis of the gram matrix, and the truncated
//! pseudo-inverse they generalize.
//!
//! With `x = V w` the norm is `sum_i w_i^2 / lambda_i`, so each eigen-coordinate
//! is minimized on its own interval: `w_i` is the point of the interval closest
//! to zero. Coordinates whose interval contains zero come out exactly zero
//! regardless of where the nominal vector sits inside it.

use nalgebra::DVector;

use super::sets::{EigenInterval, UncertaintySpec};
use super::{finish, trivial, FittedSolution, Method, SolveOptions, SolveReport};
use crate::error::{Error, Result};
use crate::gram::GramMatrix;

pub fn solve_eigenbox(
    g: &GramMatrix,
    y: &DVector<f64>,
    intervals: &[EigenInterval],
    opts: &SolveOptions,
) -> Result<FittedSolution> {
    let spec = UncertaintySpec::eigen_box(y.clone(), intervals.to_vec());
    spec.validate(g.dim())?;
    if spec.contains_origin(g) {
        return trivial(g, &spec, opts);
    }
    let e = g.eigen();
    let bounds = spec.eigen_bounds(g);
    let w = DVector::from_iterator(bounds.len(), bounds.iter().map(|&(lo, hi)| 0.0f64.clamp(lo, hi)));
    let x = e.from_eigen(&w);
    let h = e.from_eigen(&w.component_div(&e.values));
    finish(g, &spec, x, h, SolveReport::new(Method::EigenClamp), opts)
}

/// Minimum-norm interpolation with the eigen-modes below
/// `rel_threshold * lambda_max` removed: `h = sum_{stable} (v_i^T y / lambda_i) v_i`.
pub fn pseudo_inverse_reconstruct(g: &GramMatrix, y: &DVector<f64>, rel_threshold: f64) -> Result<FittedSolution> {
    g.check_dim(y)?;
    if !(0.0..1.0).contains(&rel_threshold) {
        return Err(Error::InvalidParameter(alloc::format!(
            "relative threshold must lie in [0, 1), got {rel_threshold}"
        )));
    }
    let e = g.eigen();
    let cut = rel_threshold * e.lambda_max();
    let c = e.to_eigen(y);
    let w = DVector::from_fn(c.len(), |i, _| if e.values[i] >= cut { c[i] } else { 0.0 });
    let x = e.from_eigen(&w);
    let h = e.from_eigen(&w.component_div(&e.values));
    let spec = UncertaintySpec::pseudo_inverse_box(g, y.clone(), rel_threshold, f64::INFINITY);
    let opts = SolveOptions::default();
    finish(g, &spec, x, h, SolveReport::new(Method::PseudoInverse), &opts)
}
