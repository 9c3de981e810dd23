//! Choosing the three anchor locations of the thin-plate-spline kernel.

use std::str::FromStr;

use robust_recon_core::kernels::{twice_signed_area, unisolvency_threshold};
use robust_recon_core::{cardinal_polynomials, Error, Point2};

use crate::ingest::ObservationSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorStrategy {
    /// The three most precisely observed locations.
    MinStd,
    /// The largest triangle on the convex hull.
    MaxArea,
    Explicit([usize; 3]),
}

impl FromStr for AnchorStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min-std" => Ok(AnchorStrategy::MinStd),
            "max-area" => Ok(AnchorStrategy::MaxArea),
            _ => {
                let idx: Vec<usize> = s
                    .split(',')
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| format!("expected `min-std`, `max-area` or `i,j,k`, got `{s}`"))?;
                match idx[..] {
                    [i, j, k] => Ok(AnchorStrategy::Explicit([i, j, k])),
                    _ => Err(format!("expected three indices, got {}", idx.len())),
                }
            }
        }
    }
}

fn unisolvent(pts: &[Point2], idx: [usize; 3]) -> bool {
    cardinal_polynomials([pts[idx[0]], pts[idx[1]], pts[idx[2]]]).is_ok()
}

fn area(pts: &[Point2], idx: [usize; 3]) -> f64 {
    twice_signed_area(&pts[idx[0]], &pts[idx[1]], &pts[idx[2]]).abs()
}

fn degenerate(pts: &[Point2]) -> Error {
    Error::Unisolvent {
        area: 0.0,
        threshold: unisolvency_threshold(pts),
    }
}

/// Indices of three unisolvent anchor locations.
pub fn select_anchors(obs: &ObservationSet, strategy: AnchorStrategy) -> Result<[usize; 3], Error> {
    let pts = &obs.locations;
    let n = pts.len();
    if n < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 locations for anchors, have {n}")));
    }
    match strategy {
        AnchorStrategy::Explicit(idx) => {
            if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidParameter(format!("anchor index {bad} out of range for {n} locations")));
            }
            if idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2] {
                return Err(Error::InvalidParameter(format!("anchor indices must be distinct, got {idx:?}")));
            }
            cardinal_polynomials([pts[idx[0]], pts[idx[1]], pts[idx[2]]])?;
            Ok(idx)
        }
        AnchorStrategy::MinStd => min_std(pts, &obs.stds),
        AnchorStrategy::MaxArea => max_area(pts),
    }
}

fn min_std(pts: &[Point2], stds: &[f64]) -> Result<[usize; 3], Error> {
    let mut order: Vec<usize> = (0..pts.len()).collect();
    // Stable sort: equal deviations keep the lower index first.
    order.sort_by(|&a, &b| stds[a].total_cmp(&stds[b]));
    let mut current = [order[0], order[1], order[2]];
    if unisolvent(pts, current) {
        return Ok(current);
    }
    for &candidate in &order[3..] {
        let best = (0..3)
            .map(|slot| {
                let mut trial = current;
                trial[slot] = candidate;
                trial
            })
            .max_by(|a, b| area(pts, *a).total_cmp(&area(pts, *b)))
            .expect("three slots");
        if area(pts, best) > area(pts, current) {
            current = best;
        }
        if unisolvent(pts, current) {
            return Ok(current);
        }
    }
    Err(degenerate(pts))
}

/// Andrew's monotone chain; counter-clockwise hull without collinear points.
fn convex_hull(pts: &[Point2]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| pts[a].x.total_cmp(&pts[b].x).then(pts[a].y.total_cmp(&pts[b].y)));
    if idx.len() < 3 {
        return idx;
    }
    let turn = |h: &[usize], p: usize| twice_signed_area(&pts[h[h.len() - 2]], &pts[h[h.len() - 1]], &pts[p]);
    let mut lower: Vec<usize> = Vec::new();
    for &p in &idx {
        while lower.len() >= 2 && turn(&lower, p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &p in idx.iter().rev() {
        while upper.len() >= 2 && turn(&upper, p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn max_area(pts: &[Point2]) -> Result<[usize; 3], Error> {
    let hull = convex_hull(pts);
    let h = hull.len();
    if h < 3 {
        return Err(degenerate(pts));
    }
    let tri = |a: usize, b: usize, c: usize| area(pts, [hull[a % h], hull[b % h], hull[c % h]]);
    let mut best = (0.0, [hull[0], hull[1], hull[2]]);
    // For each first vertex, the third vertex only moves forward as the second does.
    for i in 0..h {
        let mut k = i + 2;
        for j in i + 1..i + h - 1 {
            if k <= j {
                k = j + 1;
            }
            while k + 1 < i + h && tri(i, j, k + 1) >= tri(i, j, k) {
                k += 1;
            }
            let a = tri(i, j, k);
            if a > best.0 {
                best = (a, [hull[i % h], hull[j % h], hull[k % h]]);
            }
        }
    }
    if unisolvent(pts, best.1) {
        let mut idx = best.1;
        idx.sort_unstable();
        Ok(idx)
    } else {
        Err(degenerate(pts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(pts: &[(f64, f64)], stds: &[f64]) -> ObservationSet {
        ObservationSet {
            locations: pts.iter().map(|&(x, y)| Point2::new(x, y)).collect(),
            values: vec![0.0; pts.len()],
            stds: stds.to_vec(),
            counts: vec![2; pts.len()],
        }
    }

    #[test]
    fn smallest_deviations_win() {
        let o = obs(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (5.0, 5.0)], &[0.1, 0.2, 0.3, 9.0]);
        let mut a = select_anchors(&o, AnchorStrategy::MinStd).unwrap();
        a.sort_unstable();
        assert_eq!(a, [0, 1, 2]);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let o = obs(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (3.0, 1.0), (1.0, 3.0)], &[0.5; 5]);
        assert_eq!(select_anchors(&o, AnchorStrategy::MinStd).unwrap(), [0, 1, 2]);
    }

    #[test]
    fn collinear_smallest_triple_swaps_in_fourth() {
        let o = obs(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (0.0, 3.0), (9.0, 0.0)], &[0.1, 0.2, 0.3, 0.4, 0.5]);
        let a = select_anchors(&o, AnchorStrategy::MinStd).unwrap();
        assert!(a.contains(&3));
        assert!(!a.contains(&4));
    }

    #[test]
    fn all_collinear_is_an_error() {
        let o = obs(&[(0.0, 0.0), (1.0, 2.0), (2.0, 4.0), (3.0, 6.0)], &[0.1, 0.2, 0.3, 0.4]);
        for s in [AnchorStrategy::MinStd, AnchorStrategy::MaxArea] {
            assert!(matches!(select_anchors(&o, s), Err(Error::Unisolvent { .. })));
        }
    }

    #[test]
    fn max_area_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let n = rng.random_range(3..40);
            let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let o = obs(&pts, &vec![1.0; n]);
            let got = select_anchors(&o, AnchorStrategy::MaxArea).unwrap();
            let mut best: f64 = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    for k in j + 1..n {
                        best = best.max(area(&o.locations, [i, j, k]));
                    }
                }
            }
            assert!((area(&o.locations, got) - best).abs() <= 1e-12, "{} vs {best}", area(&o.locations, got));
        }
    }

    #[test]
    fn explicit_indices_are_validated() {
        let o = obs(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (2.0, 0.0)], &[1.0; 4]);
        assert_eq!(select_anchors(&o, "2, 0,1".parse().unwrap()).unwrap(), [2, 0, 1]);
        assert!(select_anchors(&o, AnchorStrategy::Explicit([0, 1, 4])).is_err());
        assert!(select_anchors(&o, AnchorStrategy::Explicit([0, 0, 1])).is_err());
        assert!(matches!(
            select_anchors(&o, AnchorStrategy::Explicit([0, 1, 3])),
            Err(Error::Unisolvent { .. })
        ));
        assert!("1,2".parse::<AnchorStrategy>().is_err());
        assert!("centroid".parse::<AnchorStrategy>().is_err());
    }
}
