//! Slow, independent reference solutions for small instances.
//!
//! Nothing here is used by the solvers. The box oracle enumerates every
//! lower/upper/free pattern; the reference gradient method runs a fixed,
//! conservative step with its own projections and an LU factorization.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::compensated;
use crate::error::{Error, Result};
use crate::gram::GramMatrix;
use crate::solvers::{Region, UncertaintySpec};

/// Largest dimension accepted by [`box_active_set_oracle`] (3^8 patterns).
pub const MAX_ORACLE_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Activity {
    Lower,
    Upper,
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub x_star: DVector<f64>,
    pub norm_sq: f64,
    /// Per-coordinate activity; empty for non-box sets.
    pub pattern: Vec<Activity>,
}

/// Exhaustive KKT enumeration for the box `|x_n - z_n| <= delta_n`.
pub fn box_active_set_oracle(g: &GramMatrix, center: &DVector<f64>, deltas: &DVector<f64>) -> Result<OracleResult> {
    let n = g.dim();
    if n > MAX_ORACLE_DIM {
        return Err(Error::InstanceTooLarge { n, max: MAX_ORACLE_DIM });
    }
    UncertaintySpec::boxed(center.clone(), deltas.clone()).validate(n)?;
    let k = g.entries();
    let lower = center - deltas;
    let upper = center + deltas;
    let scale = 1.0 + center.amax() + deltas.amax();
    let feas_tol = 1e-12 * scale;

    // (norm, kkt_ok, x, pattern)
    let mut best_kkt: Option<(f64, DVector<f64>, Vec<Activity>)> = None;
    let mut best_any: Option<(f64, DVector<f64>, Vec<Activity>)> = None;
    let total = 3usize.pow(n as u32);
    let mut pattern = alloc::vec![Activity::Lower; n];
    'patterns: for code in 0..total {
        // Coordinate 0 is the most significant digit: lexicographic order.
        let mut c = code;
        for i in (0..n).rev() {
            pattern[i] = match c % 3 {
                0 => Activity::Lower,
                1 => Activity::Upper,
                _ => Activity::Free,
            };
            c /= 3;
        }
        if (0..n).any(|i| deltas[i] == 0.0 && pattern[i] == Activity::Upper) {
            continue;
        }
        let bound: Vec<usize> = (0..n).filter(|&i| pattern[i] != Activity::Free).collect();
        let mut x = DVector::zeros(n);
        let mut h_bound = DVector::zeros(bound.len());
        for (a, &i) in bound.iter().enumerate() {
            x[i] = if pattern[i] == Activity::Lower { lower[i] } else { upper[i] };
            h_bound[a] = x[i];
        }
        if !bound.is_empty() {
            let k_bb = DMatrix::from_fn(bound.len(), bound.len(), |a, b| k[(bound[a], bound[b])]);
            let lu = k_bb.clone().lu();
            if !lu.is_invertible() {
                continue;
            }
            h_bound = compensated::refine(&k_bb, &h_bound, 2, |r| lu.solve(r).expect("checked invertible"));
        }
        for i in (0..n).filter(|&i| pattern[i] == Activity::Free) {
            x[i] = bound.iter().zip(h_bound.iter()).map(|(&j, &hj)| k[(i, j)] * hj).sum();
            if x[i] < lower[i] - feas_tol || x[i] > upper[i] + feas_tol {
                continue 'patterns;
            }
        }
        let norm: f64 = bound.iter().zip(h_bound.iter()).map(|(&j, &hj)| hj * x[j]).sum();
        let h_tol = 1e-8 * h_bound.amax().max(1.0);
        let kkt_ok = bound.iter().zip(h_bound.iter()).all(|(&i, &hi)| {
            deltas[i] == 0.0
                || match pattern[i] {
                    Activity::Lower => hi >= -h_tol,
                    Activity::Upper => hi <= h_tol,
                    Activity::Free => true,
                }
        });
        let better = |cur: &Option<(f64, DVector<f64>, Vec<Activity>)>| cur.as_ref().is_none_or(|b| norm < b.0);
        if kkt_ok && better(&best_kkt) {
            best_kkt = Some((norm, x.clone(), pattern.clone()));
        }
        if better(&best_any) {
            best_any = Some((norm, x, pattern.clone()));
        }
    }
    let (norm_sq, x_star, pattern) = best_kkt
        .or(best_any)
        .ok_or_else(|| Error::InvalidParameter("no feasible activity pattern".into()))?;
    Ok(OracleResult {
        x_star,
        norm_sq,
        pattern,
    })
}

/// Fixed-step projected gradient: `x <- P(x - 2 * step * K^-1 x)` for
/// `iterations` steps, stopping early at an exact fixed point. The default
/// step is `0.1 * lambda_min`.
pub fn reference_pgd(g: &GramMatrix, spec: &UncertaintySpec, iterations: usize, step: Option<f64>) -> Result<OracleResult> {
    let n = g.dim();
    spec.validate(n)?;
    let lu = g.entries().clone().lu();
    let norm_of = |x: &DVector<f64>| lu.solve(x).map_or(f64::NAN, |h| h.dot(x));
    if let Region::Point = spec.region {
        return Ok(OracleResult {
            norm_sq: norm_of(&spec.center),
            x_star: spec.center.clone(),
            pattern: Vec::new(),
        });
    }
    let step = step.unwrap_or(0.1 * g.eigen().lambda_min());
    let mut x = reference_projection(g, spec, &spec.center);
    for _ in 0..iterations {
        let h = lu.solve(&x).ok_or_else(|| Error::Singular("LU solve failed".into()))?;
        let next = reference_projection(g, spec, &(&x - h * (2.0 * step)));
        if next == x {
            break;
        }
        x = next;
    }
    let pattern = match &spec.region {
        Region::Box { deltas } => (0..n)
            .map(|i| {
                let d = x[i] - spec.center[i];
                if deltas[i] > 0.0 && d <= -deltas[i] {
                    Activity::Lower
                } else if deltas[i] > 0.0 && d >= deltas[i] {
                    Activity::Upper
                } else {
                    Activity::Free
                }
            })
            .collect(),
        _ => Vec::new(),
    };
    Ok(OracleResult {
        norm_sq: norm_of(&x),
        x_star: x,
        pattern,
    })
}

fn reference_projection(g: &GramMatrix, spec: &UncertaintySpec, x: &DVector<f64>) -> DVector<f64> {
    let y = &spec.center;
    match &spec.region {
        Region::Point => y.clone(),
        Region::Box { deltas } => DVector::from_fn(x.len(), |i, _| {
            x[i].max(y[i] - deltas[i]).min(y[i] + deltas[i])
        }),
        Region::L2Ball { delta } => {
            let d = x - y;
            let r = d.norm();
            if r <= *delta {
                x.clone()
            } else {
                y + d * (delta / r)
            }
        }
        Region::L1Ball { delta } => {
            let d = x - y;
            if d.lp_norm(1) <= *delta {
                return x.clone();
            }
            // Bisection on the soft threshold.
            let removed = |t: f64| d.iter().map(|v| (v.abs() - t).max(0.0)).sum::<f64>();
            let (mut lo, mut hi) = (0.0, d.amax());
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if removed(mid) > *delta {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            y + d.map(|v| v.signum() * (v.abs() - hi).max(0.0))
        }
        Region::EigenBox { intervals } => {
            let e = g.eigen();
            let c = e.vectors.tr_mul(y);
            let w = e.vectors.tr_mul(x);
            let clamped = DVector::from_fn(x.len(), |i, _| w[i].max(c[i] + intervals[i].lo).min(c[i] + intervals[i].hi));
            &e.vectors * clamped
        }
    }
}

/// Deterministic pseudo-random points inside a bounded set.
pub fn feasible_sampler(g: &GramMatrix, spec: &UncertaintySpec, count: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
    let n = g.dim();
    spec.validate(n)?;
    if !spec.is_bounded() {
        return Err(Error::Unbounded);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = &spec.center;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let x = match &spec.region {
            Region::Point => y.clone(),
            Region::Box { deltas } => DVector::from_fn(n, |i, _| {
                let u: f64 = rng.random_range(-1.0..=1.0);
                y[i] + u * deltas[i]
            }),
            Region::L2Ball { delta } => {
                let dir = DVector::from_fn(n, |_, _| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z
                });
                let u: f64 = rng.random();
                let r = delta * libm::pow(u, 1.0 / n as f64);
                let norm = dir.norm();
                if norm == 0.0 {
                    y.clone()
                } else {
                    y + dir * (r / norm)
                }
            }
            Region::L1Ball { delta } => {
                // Uniform on the simplex with one slack coordinate, random signs.
                let e: Vec<f64> = (0..=n)
                    .map(|_| {
                        let v: f64 = Exp1.sample(&mut rng);
                        v
                    })
                    .collect();
                let total: f64 = e.iter().sum();
                DVector::from_fn(n, |i, _| {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    y[i] + sign * delta * e[i] / total
                })
            }
            Region::EigenBox { .. } => {
                let bounds = spec.eigen_bounds(g);
                let w = DVector::from_fn(n, |i, _| {
                    let (lo, hi) = bounds[i];
                    if lo == hi {
                        lo
                    } else {
                        rng.random_range(lo..=hi)
                    }
                });
                g.eigen().from_eigen(&w)
            }
        };
        out.push(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{optimality_gap, EigenInterval};

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn identity(n: usize) -> GramMatrix {
        GramMatrix::from_entries(DMatrix::identity(n, n)).unwrap()
    }

    #[test]
    fn decoupled_boxes() {
        let r = box_active_set_oracle(&identity(2), &dv(&[3.0, -4.0]), &dv(&[1.0, 1.0])).unwrap();
        assert_eq!(r.x_star, dv(&[2.0, -3.0]));
        assert_eq!(r.pattern, [Activity::Lower, Activity::Upper]);
        assert_eq!(r.norm_sq, 13.0);

        let r = box_active_set_oracle(&identity(2), &dv(&[0.5, 2.0]), &dv(&[1.0, 1.0])).unwrap();
        assert_eq!(r.x_star, dv(&[0.0, 1.0]));
        assert_eq!(r.pattern, [Activity::Free, Activity::Lower]);
    }

    #[test]
    fn oracle_rejects_large_instances() {
        let g = identity(9);
        assert!(matches!(
            box_active_set_oracle(&g, &DVector::zeros(9), &DVector::zeros(9)),
            Err(Error::InstanceTooLarge { n: 9, max: 8 })
        ));
    }

    #[test]
    fn oracle_output_is_certified() {
        let k = DMatrix::from_row_slice(3, 3, &[1.0, 0.8, 0.3, 0.8, 1.0, 0.5, 0.3, 0.5, 1.0]);
        let g = GramMatrix::from_entries(k).unwrap();
        let z = dv(&[1.0, 0.2, -1.0]);
        let d = dv(&[0.3, 0.3, 0.3]);
        let r = box_active_set_oracle(&g, &z, &d).unwrap();
        let h = g.solve(&r.x_star);
        let gap = optimality_gap(&g, &UncertaintySpec::boxed(z, d), &r.x_star, &h);
        assert!(gap <= 1e-7, "{gap}");
    }

    #[test]
    fn reference_pgd_point_and_box() {
        let g = identity(2);
        let r = reference_pgd(&g, &UncertaintySpec::point(dv(&[1.0, 2.0])), 10, None).unwrap();
        assert_eq!(r.x_star, dv(&[1.0, 2.0]));

        let k = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let g = GramMatrix::from_entries(k).unwrap();
        let z = dv(&[1.0, 2.0]);
        let d = dv(&[0.5, 0.5]);
        let slow = reference_pgd(&g, &UncertaintySpec::boxed(z.clone(), d.clone()), 1_000_000, None).unwrap();
        let exact = box_active_set_oracle(&g, &z, &d).unwrap();
        assert!((slow.x_star - exact.x_star).amax() < 1e-6);
    }

    #[test]
    fn samples_are_members_and_deterministic() {
        let k = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 0.5]);
        let g = GramMatrix::from_entries(k).unwrap();
        let y = dv(&[1.0, -1.0, 0.5]);
        let specs = [
            UncertaintySpec::point(y.clone()),
            UncertaintySpec::boxed(y.clone(), dv(&[0.1, 0.0, 0.3])),
            UncertaintySpec::l2_ball(y.clone(), 0.4),
            UncertaintySpec::l1_ball(y.clone(), 0.4),
            UncertaintySpec::eigen_box(y.clone(), alloc::vec![
                EigenInterval::symmetric(0.2),
                EigenInterval::degenerate(),
                EigenInterval { lo: -0.1, hi: 0.5 },
            ]),
        ];
        for s in &specs {
            let a = feasible_sampler(&g, s, 500, 42).unwrap();
            let b = feasible_sampler(&g, s, 500, 42).unwrap();
            assert_eq!(a, b);
            for x in &a {
                assert!(s.violation(&g, x) <= 1e-12, "{s:?}");
            }
        }
        let unbounded = UncertaintySpec::eigen_box(y, alloc::vec![EigenInterval::UNBOUNDED; 3]);
        assert!(matches!(feasible_sampler(&g, &unbounded, 1, 0), Err(Error::Unbounded)));
    }
}
