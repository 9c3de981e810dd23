//! Projected gradient on `f(x) = x^T K^-1 x` over any supported set.
//!
//! The gradient `2 K^-1 x` is Lipschitz with constant `2 / lambda_min`, so the
//! step `x <- P(x - lambda_min K^-1 x)` never increases `f`. The iteration stops
//! once the variational-inequality gap meets the tolerance and the fixed-point
//! residual `|P(x - lambda_min h) - x|_inf` is below `tol * (1 + |x|_inf)`. The
//! gap alone only bounds the squared distance to the optimum on curved sets.

use super::sets::UncertaintySpec;
use super::{finish, gap_threshold, optimality_gap, trivial, FittedSolution, Method, SolveOptions, SolveReport};
use crate::error::Result;
use crate::gram::GramMatrix;

pub fn solve_pgd(g: &GramMatrix, spec: &UncertaintySpec, opts: &SolveOptions) -> Result<FittedSolution> {
    spec.validate(g.dim())?;
    if spec.contains_origin(g) {
        return trivial(g, spec, opts);
    }
    let step = g.eigen().lambda_min();

    let mut x = spec.project(g, &spec.center);
    let mut h = g.solve(&x);
    let mut best = (f64::INFINITY, x.clone(), h.clone());
    // Extrapolated point and momentum weight (momentum only).
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut iterations = 0;

    let mut converged = false;
    loop {
        let gap = optimality_gap(g, spec, &x, &h);
        if gap < best.0 {
            best = (gap, x.clone(), h.clone());
        }
        let plain = spec.project(g, &(&x - &h * step));
        let residual = (&plain - &x).amax();
        if gap <= gap_threshold(opts, h.dot(&x)) && residual <= opts.tol * (1.0 + x.amax()) {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let x_next = if opts.momentum {
            let hy = g.solve(&y);
            spec.project(g, &(&y - hy * step))
        } else {
            plain
        };
        let h_next = g.solve(&x_next);

        if opts.momentum {
            if h_next.dot(&x_next) > h.dot(&x) {
                // Restart on objective increase.
                y = x_next.clone();
                t = 1.0;
            } else {
                let t_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t));
                y = &x_next + (&x_next - &x) * ((t - 1.0) / t_next);
                t = t_next;
            }
        }
        x = x_next;
        h = h_next;
    }
    if converged {
        let mut report = SolveReport::new(Method::ProjectedGradient);
        report.iterations = iterations;
        return finish(g, spec, x, h, report, opts);
    }
    let gap = optimality_gap(g, spec, &x, &h);
    if gap < best.0 {
        best = (gap, x, h);
    }

    let (_, x, h) = best;
    let mut report = SolveReport::new(Method::ProjectedGradient);
    report.iterations = iterations;
    finish(g, spec, x, h, report, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::solvers::solve_l2ball;
    use nalgebra::{DMatrix, DVector};

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn identity_box_lands_in_two_steps() {
        let g = GramMatrix::from_entries(DMatrix::identity(2, 2)).unwrap();
        for z in [dv(&[3.0, -4.0]), dv(&[0.5, 2.0])] {
            let spec = UncertaintySpec::boxed(z, dv(&[1.0, 1.0]));
            let sol = solve_pgd(&g, &spec, &SolveOptions::default()).unwrap();
            assert!(sol.report.iterations <= 2);
        }
    }

    #[test]
    fn l2_ball_matches_closed_form() {
        let k = DMatrix::from_row_slice(3, 3, &[2.0, 0.4, 0.1, 0.4, 1.5, 0.3, 0.1, 0.3, 1.0]);
        let g = GramMatrix::from_entries(k).unwrap();
        let y = dv(&[1.0, -2.0, 0.7]);
        let closed = solve_l2ball(&g, &y, 0.8, &SolveOptions::default()).unwrap();
        for momentum in [false, true] {
            let opts = SolveOptions {
                tol: 1e-12,
                momentum,
                ..Default::default()
            };
            let it = solve_pgd(&g, &UncertaintySpec::l2_ball(y.clone(), 0.8), &opts).unwrap();
            assert!((&it.x_hat - &closed.x_hat).amax() < 1e-7, "momentum {momentum}");
        }
    }

    #[test]
    fn iteration_cap_reports_best_iterate() {
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 0.99, 0.99, 1.0]);
        let g = GramMatrix::from_entries(k).unwrap();
        let spec = UncertaintySpec::l1_ball(dv(&[1.0, 3.0]), 0.5);
        let opts = SolveOptions {
            max_iter: 3,
            ..Default::default()
        };
        match solve_pgd(&g, &spec, &opts) {
            Err(Error::NoConvergence { iterations, gap, best }) => {
                assert_eq!(iterations, 3);
                assert!(gap > 0.0);
                assert!(spec.violation(&g, &best.x_hat) <= 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }
}
