//! The l2-ball set and its smoothing-spline form.
//!
//! For `|x - y|_2 <= delta` the minimum-norm element is `x = y - lambda h` with
//! `h = (K + lambda I)^-1 y`, where `lambda` solves
//! `delta = lambda |(K + lambda I)^-1 y|_2`. In the eigenbasis of `K` the right
//! side is `sqrt(sum_i (lambda c_i / (lambda_i + lambda))^2)` with `c = V^T y`,
//! which is strictly increasing in `lambda` and tends to `|y|_2`.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::sets::UncertaintySpec;
use super::{finish, interpolate, trivial, FittedSolution, Method, SolveOptions, SolveReport};
use crate::error::{Error, Result};
use crate::gram::GramMatrix;

/// Upper limit for bracket doubling on `lambda`.
const LAMBDA_CEILING: f64 = 1e300;

/// `lambda |(K + lambda I)^-1 y|_2`, the l2 radius matched to smoothing
/// parameter `lambda`. Negative `lambda` yields NaN.
pub fn implied_delta(g: &GramMatrix, y: &DVector<f64>, lambda: f64) -> f64 {
    if !(lambda >= 0.0) {
        return f64::NAN;
    }
    if lambda == 0.0 {
        return 0.0;
    }
    let e = g.eigen();
    let c = e.to_eigen(y);
    if lambda.is_infinite() {
        return c.norm();
    }
    let sum: f64 = c
        .iter()
        .zip(e.values.iter())
        .map(|(&ci, &li)| {
            let t = ci / (1.0 + li / lambda);
            t * t
        })
        .sum();
    libm::sqrt(sum)
}

/// `h = (K + lambda I)^-1 y` and `x = y - lambda h`.
fn regularized(g: &GramMatrix, y: &DVector<f64>, lambda: f64) -> Result<(DVector<f64>, DVector<f64>)> {
    if lambda == 0.0 {
        return Ok((y.clone(), g.solve(y)));
    }
    let n = g.dim();
    let shifted = g.entries() + DMatrix::<f64>::identity(n, n) * lambda;
    let chol = Cholesky::new(shifted.clone())
        .ok_or_else(|| Error::Singular(alloc::format!("K + {lambda} I is not positive definite")))?;
    let mut h = chol.solve(y);
    let r = y - &shifted * &h;
    h += chol.solve(&r);
    let x = y - &h * lambda;
    Ok((x, h))
}

/// Generalized smoothing spline with fixed parameter `lambda`; also the
/// minimum-norm solution for the l2 ball of radius `implied_delta(lambda)`.
pub fn smoothing_spline(g: &GramMatrix, y: &DVector<f64>, lambda: f64, opts: &SolveOptions) -> Result<FittedSolution> {
    g.check_dim(y)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "smoothing parameter must be finite and >= 0, got {lambda}"
        )));
    }
    let delta = implied_delta(g, y, lambda);
    let spec = UncertaintySpec::l2_ball(y.clone(), delta);
    spec.validate(g.dim())?;
    let (x, h) = regularized(g, y, lambda)?;
    let mut report = SolveReport::new(if lambda == 0.0 {
        Method::Interpolation
    } else {
        Method::SmoothingSpline
    });
    report.lambda = Some(lambda);
    report.implied_delta = Some(delta);
    finish(g, &spec, x, h, report, opts)
}

/// Minimum-norm element of the ball `|x - y|_2 <= delta`.
pub fn solve_l2ball(g: &GramMatrix, y: &DVector<f64>, delta: f64, opts: &SolveOptions) -> Result<FittedSolution> {
    let spec = UncertaintySpec::l2_ball(y.clone(), delta);
    spec.validate(g.dim())?;
    if spec.contains_origin(g) {
        return trivial(g, &spec, opts);
    }
    if delta == 0.0 {
        let mut sol = interpolate(g, &spec, opts)?;
        sol.report.lambda = Some(0.0);
        return Ok(sol);
    }
    let (lambda, iterations) = find_lambda(g, y, delta)?;
    let (x, h) = regularized(g, y, lambda)?;
    let mut report = SolveReport::new(Method::SmoothingSpline);
    report.lambda = Some(lambda);
    report.iterations = iterations;
    finish(g, &spec, x, h, report, opts)
}

/// Root of `implied_delta(lambda) = delta` for `0 < delta < |y|_2`: bracket by
/// doubling from 1, then bisect until the bracket cannot shrink further.
fn find_lambda(g: &GramMatrix, y: &DVector<f64>, delta: f64) -> Result<(f64, usize)> {
    let mut iterations = 0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while implied_delta(g, y, hi) < delta {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if hi > LAMBDA_CEILING {
            return Err(no_lambda(g, iterations));
        }
    }
    loop {
        // Geometric midpoint once the bracket is positive: lambda may span
        // many decades.
        let mid = if lo > 0.0 { libm::sqrt(lo) * libm::sqrt(hi) } else { 0.5 * hi };
        if !(mid > lo && mid < hi) || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        iterations += 1;
        if implied_delta(g, y, mid) < delta {
            lo = mid;
        } else {
            hi = mid;
        }
        if iterations > 5_000 {
            return Err(no_lambda(g, iterations));
        }
    }
    // Closest endpoint in delta.
    let (dl, dh) = (implied_delta(g, y, lo), implied_delta(g, y, hi));
    let lambda = if (dl - delta).abs() < (dh - delta).abs() && lo > 0.0 { lo } else { hi };
    Ok((lambda, iterations))
}

fn no_lambda(g: &GramMatrix, iterations: usize) -> Error {
    let n = g.dim();
    let mut report = SolveReport::new(Method::SmoothingSpline);
    report.iterations = iterations;
    report.gap = f64::INFINITY;
    Error::NoConvergence {
        iterations,
        gap: f64::INFINITY,
        best: alloc::boxed::Box::new(FittedSolution {
            x_hat: DVector::zeros(n),
            h_hat: DVector::zeros(n),
            norm_sq: f64::NAN,
            report,
        }),
    }
}
