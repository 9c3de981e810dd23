//! Minimum-norm point of a box `|x_n - z_n| <= delta_n`.
//!
//! At the optimum every coordinate is either pinned at an endpoint with the
//! matching coefficient sign (`h_n > 0` at `z_n - delta_n`, `h_n < 0` at
//! `z_n + delta_n`) or free with `h_n = 0`. For a working set `W` of pinned
//! coordinates the free values follow from `h_F = 0`:
//! `h_W = K_WW^-1 x_W` and `x_F = K_FW h_W`.
//!
//! The solver is a primal active-set method started from the sign pattern of
//! the nominal interpolant `K^-1 z`, which is already optimal when the
//! half-widths are small enough.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector};

use super::pgd::solve_pgd;
use super::sets::UncertaintySpec;
use super::{finish, interpolate, trivial, FittedSolution, Method, SolveOptions, SolveReport};
use crate::compensated;
use crate::error::{Error, Result};
use crate::gram::GramMatrix;

/// Relative size below which a wrong-signed multiplier counts as zero.
const MULTIPLIER_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Lower,
    Upper,
    Free,
    /// Zero half-width.
    Fixed,
}

pub fn solve_box(
    g: &GramMatrix,
    center: &DVector<f64>,
    deltas: &DVector<f64>,
    opts: &SolveOptions,
) -> Result<FittedSolution> {
    let spec = UncertaintySpec::boxed(center.clone(), deltas.clone());
    spec.validate(g.dim())?;
    if spec.contains_origin(g) {
        return trivial(g, &spec, opts);
    }
    if deltas.iter().all(|&d| d == 0.0) {
        return interpolate(g, &spec, opts);
    }
    let h_nominal = g.solve(center);
    let small_delta = deltas.max() <= small_delta_bound(g, &h_nominal);

    match active_set(g, center, deltas, &h_nominal, opts.max_iter) {
        Some((x, h, iterations)) => {
            let mut report = SolveReport::new(Method::ActiveSet);
            report.iterations = iterations;
            report.small_delta_condition = Some(small_delta);
            finish(g, &spec, x, h, report, opts)
        }
        None => {
            let tag = |mut sol: FittedSolution| {
                sol.report.small_delta_condition = Some(small_delta);
                sol
            };
            match solve_pgd(g, &spec, opts) {
                Ok(sol) => Ok(tag(sol)),
                Err(Error::NoConvergence { iterations, gap, best }) => Err(Error::NoConvergence {
                    iterations,
                    gap,
                    best: alloc::boxed::Box::new(tag(*best)),
                }),
                Err(e) => Err(e),
            }
        }
    }
}

/// `min_i |h_i| / max_j sum_n |(K^-1)_jn|` for the nominal coefficients `h`.
/// Half-widths up to this value keep the interpolant's sign pattern optimal.
pub fn small_delta_bound(g: &GramMatrix, h_nominal: &DVector<f64>) -> f64 {
    let inv = g.inverse();
    let row_max = inv
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    h_nominal.amin() / row_max
}

/// Returns `(x, h, iterations)`, or `None` when the working set cycles or a
/// sub-factorization fails.
fn active_set(
    g: &GramMatrix,
    center: &DVector<f64>,
    deltas: &DVector<f64>,
    h_nominal: &DVector<f64>,
    max_iter: usize,
) -> Option<(DVector<f64>, DVector<f64>, usize)> {
    let n = g.dim();
    let k = g.entries();
    let lower = center - deltas;
    let upper = center + deltas;

    let mut status: Vec<Status> = (0..n)
        .map(|i| {
            if deltas[i] == 0.0 {
                Status::Fixed
            } else if h_nominal[i] > 0.0 {
                Status::Lower
            } else if h_nominal[i] < 0.0 {
                Status::Upper
            } else {
                Status::Free
            }
        })
        .collect();
    let mut x = DVector::from_fn(n, |i, _| match status[i] {
        Status::Lower => lower[i],
        Status::Upper => upper[i],
        Status::Free | Status::Fixed => center[i],
    });

    let cap = max_iter.min(50 * n + 100);
    for iter in 1..=cap {
        let pinned: Vec<usize> = (0..n).filter(|&i| status[i] != Status::Free).collect();
        let free: Vec<usize> = (0..n).filter(|&i| status[i] == Status::Free).collect();

        // The free values amplify any error in h_W by K^-1 once h is
        // recomputed from x, so they are formed from h_W + its rounding error.
        let (h_pinned, h_low) = if pinned.is_empty() {
            (DVector::zeros(0), DVector::zeros(0))
        } else {
            let k_ww = DMatrix::from_fn(pinned.len(), pinned.len(), |a, b| k[(pinned[a], pinned[b])]);
            let x_w = DVector::from_fn(pinned.len(), |a, _| x[pinned[a]]);
            let chol = Cholesky::new(k_ww.clone())?;
            compensated::refine_split(&k_ww, &x_w, 2, |r| chol.solve(r))
        };
        let target: Vec<f64> = free
            .iter()
            .map(|&i| {
                let terms = pinned.iter().zip(h_pinned.iter().zip(h_low.iter()));
                compensated::dot(terms.flat_map(|(&j, (&hi, &lo))| [(k[(i, j)], hi), (k[(i, j)], lo)]))
            })
            .collect();

        // Longest feasible step toward the subspace minimizer.
        let mut alpha = 1.0;
        let mut blocking = None;
        for (&i, &t) in free.iter().zip(target.iter()) {
            let d = t - x[i];
            let (step, bound) = if d < 0.0 {
                ((lower[i] - x[i]) / d, Status::Lower)
            } else if d > 0.0 {
                ((upper[i] - x[i]) / d, Status::Upper)
            } else {
                continue;
            };
            if step < alpha {
                alpha = step.max(0.0);
                blocking = Some((i, bound));
            }
        }

        if let Some((b, bound)) = blocking {
            for (&i, &t) in free.iter().zip(target.iter()) {
                x[i] += alpha * (t - x[i]);
            }
            status[b] = bound;
            x[b] = if bound == Status::Lower { lower[b] } else { upper[b] };
            continue;
        }

        for (&i, &t) in free.iter().zip(target.iter()) {
            x[i] = t;
        }
        let scale = h_pinned.amax();
        let mut worst: Option<(usize, f64)> = None;
        for (&i, &hi) in pinned.iter().zip(h_pinned.iter()) {
            let violation = match status[i] {
                Status::Lower => -hi,
                Status::Upper => hi,
                _ => continue,
            };
            if violation > MULTIPLIER_RTOL * scale && worst.is_none_or(|(_, v)| violation > v) {
                worst = Some((i, violation));
            }
        }
        match worst {
            Some((i, _)) => status[i] = Status::Free,
            None => {
                let mut h = DVector::zeros(n);
                for (&i, &hi) in pinned.iter().zip(h_pinned.iter()) {
                    h[i] = hi;
                }
                return Some((x, h, iter));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::verify_optimality;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn identity(n: usize) -> GramMatrix {
        GramMatrix::from_entries(DMatrix::identity(n, n)).unwrap()
    }

    #[test]
    fn identity_gram_shrinks_each_coordinate() {
        let sol = solve_box(&identity(2), &dv(&[3.0, -4.0]), &dv(&[1.0, 1.0]), &SolveOptions::default()).unwrap();
        assert_eq!(sol.x_hat, dv(&[2.0, -3.0]));
        assert_eq!(sol.h_hat, dv(&[2.0, -3.0]));
    }

    #[test]
    fn identity_gram_soft_threshold_to_zero() {
        let sol = solve_box(&identity(2), &dv(&[0.5, 2.0]), &dv(&[1.0, 1.0]), &SolveOptions::default()).unwrap();
        assert_eq!(sol.x_hat, dv(&[0.0, 1.0]));
        assert_eq!(sol.h_hat[0], 0.0);
    }

    #[test]
    fn zero_widths_interpolate() {
        let g = GramMatrix::from_entries(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0])).unwrap();
        let z = dv(&[1.0, 2.0]);
        let sol = solve_box(&g, &z, &dv(&[0.0, 0.0]), &SolveOptions::default()).unwrap();
        assert_eq!(sol.x_hat, z);
        assert_eq!(sol.report.method, Method::Interpolation);
    }

    #[test]
    fn kkt_sign_pattern_on_correlated_gram() {
        let g = GramMatrix::from_entries(DMatrix::from_row_slice(3, 3, &[
            1.0, 0.9, 0.5, //
            0.9, 1.0, 0.7, //
            0.5, 0.7, 1.0,
        ]))
        .unwrap();
        let z = dv(&[1.0, -1.0, 2.0]);
        let d = dv(&[0.3, 0.2, 0.1]);
        let sol = solve_box(&g, &z, &d, &SolveOptions::default()).unwrap();
        for i in 0..3 {
            let h = sol.h_hat[i];
            if h != 0.0 {
                assert!((sol.x_hat[i] - (z[i] - h.signum() * d[i])).abs() < 1e-9);
            } else {
                assert!((sol.x_hat[i] - z[i]).abs() <= d[i] + 1e-9);
            }
        }
        let spec = UncertaintySpec::boxed(z, d);
        assert!(verify_optimality(&g, &sol.x_hat, &spec) <= 1e-8);
    }

    #[test]
    fn small_delta_keeps_nominal_signs() {
        let g = GramMatrix::from_entries(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
        let z = dv(&[1.0, 1.0]);
        let h0 = g.solve(&z);
        let bound = small_delta_bound(&g, &h0);
        let d = DVector::from_element(2, 0.9 * bound);
        let sol = solve_box(&g, &z, &d, &SolveOptions::default()).unwrap();
        assert_eq!(sol.report.small_delta_condition, Some(true));
        for i in 0..2 {
            assert_eq!(sol.h_hat[i].signum(), h0[i].signum());
            assert_eq!(sol.x_hat[i], z[i] - h0[i].signum() * d[i]);
        }
    }
}
