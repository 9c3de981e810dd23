//! Residuals in twice the working precision, for iterative refinement.

use nalgebra::{DMatrix, DVector};

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, libm::fma(a, b, -p))
}

/// `b - A x`, accumulated as an unevaluated sum of two doubles per entry.
pub(crate) fn residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(a.nrows(), |i, _| {
        let (mut s, mut c) = (b[i], 0.0);
        for j in 0..a.ncols() {
            let (p, pe) = two_prod(-a[(i, j)], x[j]);
            let (t, te) = two_sum(s, p);
            s = t;
            c += pe + te;
        }
        s + c
    })
}

/// `sum_i a_i b_i` with the same compensation as [`residual`].
pub(crate) fn dot<I: IntoIterator<Item = (f64, f64)>>(terms: I) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for (a, b) in terms {
        let (p, pe) = two_prod(a, b);
        let (t, te) = two_sum(s, p);
        s = t;
        c += pe + te;
    }
    s + c
}

/// Solves `A x = b` given an approximate solver for `A`, refining against
/// accurately computed residuals.
pub(crate) fn refine<F>(a: &DMatrix<f64>, b: &DVector<f64>, steps: usize, solve: F) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut x = solve(b);
    for _ in 0..steps {
        x += solve(&residual(a, &x, b));
    }
    x
}

/// [`refine`] with the remaining error returned as a second component, so that
/// `hi + lo` resolves `A^-1 b` below the rounding of `hi`.
pub(crate) fn refine_split<F>(a: &DMatrix<f64>, b: &DVector<f64>, steps: usize, solve: F) -> (DVector<f64>, DVector<f64>)
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let hi = refine(a, b, steps, &solve);
    let r = residual(a, &hi, b);
    let mut lo = solve(&r);
    lo += solve(&(&r - a * &lo));
    (hi, lo)
}
