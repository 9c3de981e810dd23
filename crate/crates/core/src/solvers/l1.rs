//! The l1-ball set `|x - y|_1 <= delta`.
//!
//! At the optimum the coefficients `h = K^-1 x` satisfy `|h_n| <= tau`, every
//! coordinate that moved (`x_n != y_n`) has `h_n = tau * sign(y_n - x_n)`, and
//! the moved mass is exactly `delta`.
//!
//! With a diagonal gram `K = diag(s_n)` this means the robust coefficients are
//! the nominal ones `y_n / s_n` clipped in magnitude at a threshold `tau` with
//! `sum_n s_n (|h_n| - tau)^+ = delta`, solved in closed form.
//!
//! For a general gram the solution is piecewise linear in `tau`. Starting from
//! the nominal interpolant (`tau = max |K^-1 y|`), `tau` is lowered while
//! coordinates join the moved set when their `|h_n|` reaches `tau` and leave
//! it when their displacement returns to zero, until the moved mass reaches
//! `delta`. Projected gradient is the fallback if this path breaks down.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector};

use super::pgd::solve_pgd;
use super::sets::UncertaintySpec;
use super::{finish, interpolate, trivial, FittedSolution, Method, SolveOptions, SolveReport};
use crate::compensated;
use crate::error::{Error, Result};
use crate::gram::GramMatrix;

pub fn solve_l1ball(g: &GramMatrix, y: &DVector<f64>, delta: f64, opts: &SolveOptions) -> Result<FittedSolution> {
    let spec = UncertaintySpec::l1_ball(y.clone(), delta);
    spec.validate(g.dim())?;
    if spec.contains_origin(g) {
        return trivial(g, &spec, opts);
    }
    if delta == 0.0 {
        return interpolate(g, &spec, opts);
    }
    if !is_diagonal(g) {
        if let Some((x, h, tau, events)) = homotopy(g, y, delta, opts.max_iter) {
            let mut report = SolveReport::new(Method::Clipping);
            report.tau = Some(tau);
            report.iterations = events;
            match finish(g, &spec, x, h, report, opts) {
                Err(Error::NoConvergence { .. }) => {}
                done => return done,
            }
        }
        return solve_pgd(g, &spec, opts);
    }
    let weights = g.entries().diagonal();
    let nominal = y.component_div(&weights);
    let tau = clip_threshold(&nominal, &weights, delta);
    let h = nominal.map(|v| v.signum() * v.abs().min(tau));
    let x = h.component_mul(&weights);
    let mut report = SolveReport::new(Method::Clipping);
    report.tau = Some(tau);
    finish(g, &spec, x, h, report, opts)
}

/// Relative slack when comparing event positions with the current `tau`.
const EVENT_RTOL: f64 = 1e-12;

/// Follows the solution path from `tau = max |K^-1 y|` down to the `tau` at
/// which the moved mass equals `delta`. Returns `(x, h, tau, events)`, or
/// `None` if a sub-factorization fails or the path does not terminate.
fn homotopy(
    g: &GramMatrix,
    y: &DVector<f64>,
    delta: f64,
    max_iter: usize,
) -> Option<(DVector<f64>, DVector<f64>, f64, usize)> {
    let n = g.dim();
    let k = g.entries();
    let h0 = g.solve(y);
    let mut tau = h0.amax();
    if !(tau > 0.0) {
        return None;
    }
    // sign[n] != 0 marks a moved coordinate with h_n = tau * sign[n].
    let mut sign: Vec<f64> = h0
        .iter()
        .map(|&v| if v.abs() >= tau * (1.0 - EVENT_RTOL) { v.signum() } else { 0.0 })
        .collect();

    let cap = max_iter.min(20 * n + 100);
    for events in 0..cap {
        let moved: Vec<usize> = (0..n).filter(|&i| sign[i] != 0.0).collect();
        let fixed: Vec<usize> = (0..n).filter(|&i| sign[i] == 0.0).collect();
        let sigma = DVector::from_fn(moved.len(), |a, _| sign[moved[a]]);

        // h_F(t) = a - t b from the fixed rows of K h = x with x_F = y_F.
        let (a, b) = if fixed.is_empty() {
            (DVector::zeros(0), DVector::zeros(0))
        } else {
            let k_ff = DMatrix::from_fn(fixed.len(), fixed.len(), |i, j| k[(fixed[i], fixed[j])]);
            let chol = Cholesky::new(k_ff.clone())?;
            let y_f = DVector::from_fn(fixed.len(), |i, _| y[fixed[i]]);
            let k_fs_sigma = DVector::from_fn(fixed.len(), |i, _| {
                moved.iter().zip(sigma.iter()).map(|(&j, &s)| k[(fixed[i], j)] * s).sum()
            });
            (
                compensated::refine(&k_ff, &y_f, 2, |r| chol.solve(r)),
                compensated::refine(&k_ff, &k_fs_sigma, 2, |r| chol.solve(r)),
            )
        };
        // x_S(t) = p + t q.
        let p = DVector::from_fn(moved.len(), |i, _| {
            fixed.iter().zip(a.iter()).map(|(&j, &aj)| k[(moved[i], j)] * aj).sum::<f64>()
        });
        let q = DVector::from_fn(moved.len(), |i, _| {
            let ks: f64 = moved.iter().zip(sigma.iter()).map(|(&j, &s)| k[(moved[i], j)] * s).sum();
            let kf: f64 = fixed.iter().zip(b.iter()).map(|(&j, &bj)| k[(moved[i], j)] * bj).sum();
            ks - kf
        });
        // Moved mass D(t) = c0 - t c1.
        let c0: f64 = moved.iter().enumerate().map(|(i, &m)| sign[m] * (y[m] - p[i])).sum();
        let c1: f64 = moved.iter().enumerate().map(|(i, &m)| sign[m] * q[i]).sum();
        let target = if c1 > 0.0 { (c0 - delta) / c1 } else { f64::NEG_INFINITY };

        // Roots are only events if the condition is violated just below them.
        let limit = tau * (1.0 + EVENT_RTOL);
        let mut next: Option<(f64, usize, f64)> = None;
        let mut consider = |t: f64, idx: usize, new_sign: f64| {
            if t > 0.0 && t <= limit && next.is_none_or(|(best, _, _)| t > best) {
                next = Some((t, idx, new_sign));
            }
        };
        for (i, &f) in fixed.iter().enumerate() {
            // h - t = a - t (b + 1) grows as t falls when b + 1 > 0.
            if b[i] + 1.0 > 0.0 {
                consider(a[i] / (b[i] + 1.0), f, 1.0);
            }
            // h + t = a - t (b - 1) falls with t when b - 1 < 0.
            if b[i] - 1.0 < 0.0 {
                consider(a[i] / (b[i] - 1.0), f, -1.0);
            }
        }
        for (i, &m) in moved.iter().enumerate() {
            // The displacement sign[m] * (y - p - t q) shrinks as t falls when sign * q < 0.
            if sign[m] * q[i] < 0.0 {
                consider((y[m] - p[i]) / q[i], m, 0.0);
            }
        }

        let event_tau = next.map_or(0.0, |(t, _, _)| t);
        if target > event_tau && target <= limit {
            let t = target.max(0.0);
            let mut h = DVector::zeros(n);
            let mut x = y.clone();
            for (i, &m) in moved.iter().enumerate() {
                h[m] = t * sign[m];
                x[m] = p[i] + t * q[i];
            }
            for (i, &f) in fixed.iter().enumerate() {
                h[f] = a[i] - t * b[i];
            }
            return Some((x, h, t, events));
        }
        let (t, idx, new_sign) = next?;
        tau = t;
        sign[idx] = new_sign;
    }
    None
}

fn is_diagonal(g: &GramMatrix) -> bool {
    let k = g.entries();
    let n = g.dim();
    (0..n).all(|j| (0..n).all(|i| i == j || k[(i, j)] == 0.0))
}

/// Solves `sum_n w_n (|h_n| - tau)^+ = delta` for `tau`, exactly on the linear
/// piece that contains the root. Requires `0 < delta < sum_n w_n |h_n|`.
fn clip_threshold(h: &DVector<f64>, w: &DVector<f64>, delta: f64) -> f64 {
    let mut pairs: Vec<(f64, f64)> = h.iter().zip(w.iter()).map(|(&hi, &wi)| (hi.abs(), wi)).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    // On [a_{k+1}, a_k] the removed mass is S_k - tau * W_k over the k largest.
    let mut s = 0.0;
    let mut wsum = 0.0;
    for k in 0..pairs.len() {
        s += pairs[k].0 * pairs[k].1;
        wsum += pairs[k].1;
        let next = pairs.get(k + 1).map_or(0.0, |p| p.0);
        if s - next * wsum >= delta {
            return (s - delta) / wsum;
        }
    }
    0.0
}
