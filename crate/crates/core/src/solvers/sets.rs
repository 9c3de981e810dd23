//! Convex sets of admissible observation vectors.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::gram::GramMatrix;

/// Coefficients this small (relative to the largest) along an unbounded
/// eigen-direction are treated as exact zeros by the linear minimization.
const UNBOUNDED_COEFF_RTOL: f64 = 1e-13;

/// Interval in one eigen-coordinate, as offsets from the center's coordinate:
/// the admissible range of `w_i` is `[c_i + lo, c_i + hi]` with `c = V^T center`.
/// Either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenInterval {
    pub lo: f64,
    pub hi: f64,
}

impl EigenInterval {
    pub const UNBOUNDED: EigenInterval = EigenInterval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn symmetric(half_width: f64) -> Self {
        Self {
            lo: -half_width,
            hi: half_width,
        }
    }

    pub fn degenerate() -> Self {
        Self { lo: 0.0, hi: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Exact observations (interpolation).
    Point,
    /// `|x_n - c_n| <= deltas[n]`.
    Box { deltas: DVector<f64> },
    /// `|x - c|_2 <= delta`.
    L2Ball { delta: f64 },
    /// `|x - c|_1 <= delta`.
    L1Ball { delta: f64 },
    /// Independent intervals along the eigenvectors of the gram matrix.
    EigenBox { intervals: Vec<EigenInterval> },
}

/// A convex uncertainty set `C` around a nominal observation vector.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintySpec {
    pub center: DVector<f64>,
    pub region: Region,
}

impl UncertaintySpec {
    pub fn point(center: DVector<f64>) -> Self {
        Self {
            center,
            region: Region::Point,
        }
    }

    pub fn boxed(center: DVector<f64>, deltas: DVector<f64>) -> Self {
        Self {
            center,
            region: Region::Box { deltas },
        }
    }

    pub fn l2_ball(center: DVector<f64>, delta: f64) -> Self {
        Self {
            center,
            region: Region::L2Ball { delta },
        }
    }

    pub fn l1_ball(center: DVector<f64>, delta: f64) -> Self {
        Self {
            center,
            region: Region::L1Ball { delta },
        }
    }

    pub fn eigen_box(center: DVector<f64>, intervals: Vec<EigenInterval>) -> Self {
        Self {
            center,
            region: Region::EigenBox { intervals },
        }
    }

    /// The eigen-box whose solution equals the truncated pseudo-inverse
    /// reconstruction: a single point in the stable eigen-coordinates
    /// (`lambda_i >= rel_threshold * lambda_max`) and `[-half_width, half_width]`
    /// around the center elsewhere.
    pub fn pseudo_inverse_box(g: &GramMatrix, y: DVector<f64>, rel_threshold: f64, half_width: f64) -> Self {
        let e = g.eigen();
        let cut = rel_threshold * e.lambda_max();
        let intervals = e
            .values
            .iter()
            .map(|&l| {
                if l >= cut {
                    EigenInterval::degenerate()
                } else {
                    EigenInterval::symmetric(half_width)
                }
            })
            .collect();
        Self::eigen_box(y, intervals)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.center.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.center.len(),
            });
        }
        if self.center.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("nominal observations"));
        }
        let radius = |d: f64, what: &str| {
            if d.is_finite() && d >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{what} must be finite and >= 0, got {d}")))
            }
        };
        match &self.region {
            Region::Point => Ok(()),
            Region::Box { deltas } => {
                if deltas.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: deltas.len(),
                    });
                }
                deltas.iter().try_for_each(|&d| radius(d, "box half-width"))
            }
            Region::L2Ball { delta } => radius(*delta, "l2 radius"),
            Region::L1Ball { delta } => radius(*delta, "l1 radius"),
            Region::EigenBox { intervals } => {
                if intervals.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: intervals.len(),
                    });
                }
                for (i, iv) in intervals.iter().enumerate() {
                    if iv.lo.is_nan() || iv.hi.is_nan() || iv.lo > iv.hi || iv.lo == f64::INFINITY || iv.hi == f64::NEG_INFINITY {
                        return Err(Error::InvalidParameter(format!(
                            "eigen interval {i} is empty or malformed: [{}, {}]",
                            iv.lo, iv.hi
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn is_bounded(&self) -> bool {
        match &self.region {
            Region::EigenBox { intervals } => intervals.iter().all(|iv| iv.lo.is_finite() && iv.hi.is_finite()),
            _ => true,
        }
    }

    /// Absolute eigen-coordinate bounds `[c_i + lo, c_i + hi]`.
    pub(crate) fn eigen_bounds(&self, g: &GramMatrix) -> Vec<(f64, f64)> {
        let Region::EigenBox { intervals } = &self.region else {
            return Vec::new();
        };
        let c = g.eigen().to_eigen(&self.center);
        intervals.iter().zip(c.iter()).map(|(iv, &ci)| (ci + iv.lo, ci + iv.hi)).collect()
    }

    /// Whether the origin of observation space lies in the set.
    pub fn contains_origin(&self, g: &GramMatrix) -> bool {
        let y = &self.center;
        match &self.region {
            Region::Point => y.iter().all(|&v| v == 0.0),
            Region::Box { deltas } => y.iter().zip(deltas.iter()).all(|(c, d)| c.abs() <= *d),
            Region::L2Ball { delta } => y.norm() <= *delta,
            Region::L1Ball { delta } => y.lp_norm(1) <= *delta,
            Region::EigenBox { .. } => self.eigen_bounds(g).iter().all(|&(lo, hi)| lo <= 0.0 && 0.0 <= hi),
        }
    }

    /// Largest constraint violation of `x` (zero when `x` is in the set).
    pub fn violation(&self, g: &GramMatrix, x: &DVector<f64>) -> f64 {
        let d = x - &self.center;
        match &self.region {
            Region::Point => d.amax(),
            Region::Box { deltas } => d
                .iter()
                .zip(deltas.iter())
                .map(|(di, r)| (di.abs() - r).max(0.0))
                .fold(0.0, f64::max),
            Region::L2Ball { delta } => (d.norm() - delta).max(0.0),
            Region::L1Ball { delta } => (d.lp_norm(1) - delta).max(0.0),
            Region::EigenBox { .. } => {
                let w = g.eigen().to_eigen(x);
                self.eigen_bounds(g)
                    .iter()
                    .zip(w.iter())
                    .map(|(&(lo, hi), &wi)| (lo - wi).max(wi - hi).max(0.0))
                    .fold(0.0, f64::max)
            }
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, g: &GramMatrix, x: &DVector<f64>) -> DVector<f64> {
        let y = &self.center;
        match &self.region {
            Region::Point => y.clone(),
            Region::Box { deltas } => DVector::from_iterator(
                x.len(),
                x.iter()
                    .zip(y.iter())
                    .zip(deltas.iter())
                    .map(|((&xi, &ci), &r)| xi.clamp(ci - r, ci + r)),
            ),
            Region::L2Ball { delta } => {
                let d = x - y;
                let n = d.norm();
                if n <= *delta {
                    x.clone()
                } else {
                    y + d * (delta / n)
                }
            }
            Region::L1Ball { delta } => y + project_l1(&(x - y), *delta),
            Region::EigenBox { .. } => {
                let e = g.eigen();
                let mut w = e.to_eigen(x);
                for (wi, (lo, hi)) in w.iter_mut().zip(self.eigen_bounds(g)) {
                    *wi = wi.clamp(lo, hi);
                }
                e.from_eigen(&w)
            }
        }
    }

    /// `min_{x in C} c^T x`, possibly `-inf` for unbounded eigen-boxes.
    pub fn linear_min(&self, g: &GramMatrix, c: &DVector<f64>) -> f64 {
        let y = &self.center;
        match &self.region {
            Region::Point => c.dot(y),
            Region::Box { deltas } => c
                .iter()
                .zip(y.iter())
                .zip(deltas.iter())
                .map(|((&ci, &yi), &r)| ci * yi - r * ci.abs())
                .sum(),
            Region::L2Ball { delta } => c.dot(y) - delta * c.norm(),
            Region::L1Ball { delta } => c.dot(y) - delta * c.amax(),
            Region::EigenBox { .. } => {
                let cw = g.eigen().to_eigen(c);
                let snap = UNBOUNDED_COEFF_RTOL * cw.amax();
                self.eigen_bounds(g)
                    .iter()
                    .zip(cw.iter())
                    .map(|(&(lo, hi), &ci)| {
                        let end = if ci > 0.0 { lo } else { hi };
                        if end.is_infinite() {
                            if ci.abs() <= snap {
                                0.0
                            } else {
                                f64::NEG_INFINITY
                            }
                        } else {
                            ci * end
                        }
                    })
                    .sum()
            }
        }
    }
}

/// Projection of `v` onto the l1 ball of radius `radius` centered at zero.
pub fn project_l1(v: &DVector<f64>, radius: f64) -> DVector<f64> {
    if v.lp_norm(1) <= radius {
        return v.clone();
    }
    if radius == 0.0 {
        return DVector::zeros(v.len());
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        cum += m;
        let t = (cum - radius) / (k + 1) as f64;
        if m > t {
            theta = t;
        } else {
            break;
        }
    }
    v.map(|x| x.signum() * (x.abs() - theta).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn l1_projection_known_values() {
        let p = project_l1(&dv(&[3.0, 1.0]), 1.0);
        assert_eq!(p, dv(&[1.0, 0.0]));
        let p = project_l1(&dv(&[1.0, -1.0]), 1.0);
        assert!((p - dv(&[0.5, -0.5])).amax() < 1e-15);
        let p = project_l1(&dv(&[0.2, 0.3]), 1.0);
        assert_eq!(p, dv(&[0.2, 0.3]));
    }

    #[test]
    fn validation() {
        let c = dv(&[1.0, 2.0]);
        assert!(UncertaintySpec::boxed(c.clone(), dv(&[1.0, -0.1])).validate(2).is_err());
        assert!(UncertaintySpec::l2_ball(c.clone(), f64::INFINITY).validate(2).is_err());
        assert!(UncertaintySpec::l1_ball(c.clone(), 0.5).validate(3).is_err());
        let bad = alloc::vec![EigenInterval { lo: 1.0, hi: 0.0 }, EigenInterval::UNBOUNDED];
        assert!(UncertaintySpec::eigen_box(c.clone(), bad).validate(2).is_err());
        let ok = alloc::vec![EigenInterval::degenerate(), EigenInterval::UNBOUNDED];
        assert!(UncertaintySpec::eigen_box(c, ok).validate(2).is_ok());
    }

    #[test]
    fn projections_land_in_set() {
        let g = GramMatrix::from_entries(DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0])).unwrap();
        let c = dv(&[1.0, -1.0]);
        let specs = [
            UncertaintySpec::boxed(c.clone(), dv(&[0.5, 0.25])),
            UncertaintySpec::l2_ball(c.clone(), 0.5),
            UncertaintySpec::l1_ball(c.clone(), 0.5),
            UncertaintySpec::eigen_box(c.clone(), alloc::vec![EigenInterval::symmetric(0.1), EigenInterval::symmetric(0.4)]),
        ];
        for s in &specs {
            for x in [dv(&[5.0, 5.0]), dv(&[-3.0, 0.1]), dv(&[1.0, -1.0])] {
                let p = s.project(&g, &x);
                assert!(s.violation(&g, &p) <= 1e-12, "{s:?} {p}");
            }
        }
    }

    #[test]
    fn linear_min_is_attained_by_projection_of_far_point() {
        // For balls/boxes, min c^T x is attained at the projection of center - t*c
        // for large t.
        let g = GramMatrix::from_entries(DMatrix::identity(3, 3)).unwrap();
        let c = dv(&[0.5, -2.0, 1.0]);
        let y = dv(&[1.0, 2.0, 3.0]);
        for s in [
            UncertaintySpec::boxed(y.clone(), dv(&[0.1, 0.2, 0.3])),
            UncertaintySpec::l2_ball(y.clone(), 0.7),
            UncertaintySpec::l1_ball(y.clone(), 0.7),
        ] {
            let far = s.project(&g, &(&y - &c * 1e6));
            assert!((c.dot(&far) - s.linear_min(&g, &c)).abs() < 1e-9, "{s:?}");
        }
    }

    #[test]
    fn origin_membership() {
        let g = GramMatrix::from_entries(DMatrix::identity(2, 2)).unwrap();
        assert!(UncertaintySpec::boxed(dv(&[0.5, -1.0]), dv(&[0.5, 1.0])).contains_origin(&g));
        assert!(!UncertaintySpec::boxed(dv(&[0.5, -1.0]), dv(&[0.4, 1.0])).contains_origin(&g));
        assert!(UncertaintySpec::l1_ball(dv(&[0.5, -1.0]), 1.5).contains_origin(&g));
        assert!(!UncertaintySpec::l2_ball(dv(&[3.0, 4.0]), 4.9).contains_origin(&g));
        assert!(UncertaintySpec::point(dv(&[0.0, 0.0])).contains_origin(&g));
    }
}
