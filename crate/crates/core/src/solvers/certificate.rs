use nalgebra::DVector;

use super::sets::UncertaintySpec;
use crate::gram::GramMatrix;

/// Gap `h^T x - min_{x' in C} h^T x'` for a candidate pair `(x, h)` with
/// `x = K h`. It is non-negative up to rounding for admissible `x` and zero
/// exactly at the minimum-norm element.
pub fn optimality_gap(g: &GramMatrix, spec: &UncertaintySpec, x_hat: &DVector<f64>, h_hat: &DVector<f64>) -> f64 {
    h_hat.dot(x_hat) - spec.linear_min(g, h_hat)
}

/// Optimality gap of `x_hat` alone, with `h = K^-1 x_hat` recomputed from the
/// gram factorization.
pub fn verify_optimality(g: &GramMatrix, x_hat: &DVector<f64>, spec: &UncertaintySpec) -> f64 {
    let h = g.solve(x_hat);
    optimality_gap(g, spec, x_hat, &h)
}
