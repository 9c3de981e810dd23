//! Reproducing kernels on the plane.
//!
//! The thin-plate-spline kernel is the reproducing kernel of the Beppo-Levi
//! space `BL_2` normed by the second-derivative energy plus the squared values
//! at three anchor points. It is built from `E(a, b) = |a - b|^2 ln |a - b|`
//! and the affine cardinal polynomials of the anchors.

use core::f64::consts::PI;

use crate::error::{Error, Result};

/// Distances below this are treated as zero in `r^2 ln r`.
const LOG_CUTOFF: f64 = 1e-150;

/// Relative threshold on `|2 * area|` of the anchor triangle.
pub const UNISOLVENCY_THRESHOLD: f64 = 1e-9;

/// Two points are the same location when both coordinates agree within this.
pub const COINCIDENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Like [`Point2::new`] but rejects NaN and infinite coordinates.
    pub fn try_new(x: f64, y: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() {
            Ok(Self { x, y })
        } else {
            Err(Error::NonFinite("point coordinates"))
        }
    }

    pub fn dist_sq(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn coincides(&self, other: &Point2) -> bool {
        (self.x - other.x).abs() <= COINCIDENCE_TOL && (self.y - other.y).abs() <= COINCIDENCE_TOL
    }
}

/// Twice the signed area of the triangle `(a, b, c)`.
pub fn twice_signed_area(a: &Point2, b: &Point2, c: &Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)
}

/// Minimum `|2 * area|` for three points to count as unisolvent.
pub fn unisolvency_threshold(pts: &[Point2]) -> f64 {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in pts {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let scale = (x1 - x0).max(y1 - y0);
    UNISOLVENCY_THRESHOLD * scale * scale
}

/// Affine polynomial `a + b*x + c*y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinePoly {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl AffinePoly {
    #[inline]
    pub fn eval(&self, p: &Point2) -> f64 {
        self.a + self.b * p.x + self.c * p.y
    }
}

/// Three unisolvent anchors with their cardinal polynomials
/// (`polys[i]` is one at `anchors[i]` and zero at the other two).
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorBasis {
    anchors: [Point2; 3],
    polys: [AffinePoly; 3],
    // E(v_i, v_j) between anchors, reused by every kernel evaluation.
    anchor_e: [[f64; 3]; 3],
}

impl AnchorBasis {
    pub fn anchors(&self) -> &[Point2; 3] {
        &self.anchors
    }

    pub fn polys(&self) -> &[AffinePoly; 3] {
        &self.polys
    }

    fn eval_all(&self, p: &Point2) -> [f64; 3] {
        [self.polys[0].eval(p), self.polys[1].eval(p), self.polys[2].eval(p)]
    }
}

/// Builds the cardinal basis of degree-one polynomials for three anchors.
pub fn cardinal_polynomials(anchors: [Point2; 3]) -> Result<AnchorBasis> {
    if anchors.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::NonFinite("anchor coordinates"));
    }
    let [v0, v1, v2] = anchors;
    let det = twice_signed_area(&v0, &v1, &v2);
    let threshold = unisolvency_threshold(&anchors);
    if !(det.abs() >= threshold) || det == 0.0 {
        return Err(Error::Unisolvent {
            area: det.abs(),
            threshold,
        });
    }
    // p_i is the barycentric coordinate of the vertex opposite edge (j, k).
    let poly = |vj: &Point2, vk: &Point2| AffinePoly {
        a: (vj.x * vk.y - vk.x * vj.y) / det,
        b: (vj.y - vk.y) / det,
        c: (vk.x - vj.x) / det,
    };
    let polys = [poly(&v1, &v2), poly(&v2, &v0), poly(&v0, &v1)];
    let mut anchor_e = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            anchor_e[i][j] = r2_log_r(&anchors[i], &anchors[j]);
        }
    }
    Ok(AnchorBasis {
        anchors,
        polys,
        anchor_e,
    })
}

/// `|a - b|^2 ln |a - b|`, zero at coincident points.
#[inline]
pub fn r2_log_r(a: &Point2, b: &Point2) -> f64 {
    let d2 = a.dist_sq(b);
    if d2 < LOG_CUTOFF * LOG_CUTOFF {
        0.0
    } else {
        0.5 * d2 * libm::log(d2)
    }
}

/// The thin-plate-spline reproducing kernel for the given anchors.
pub fn tps_kernel(u: &Point2, v: &Point2, basis: &AnchorBasis) -> f64 {
    let pu = basis.eval_all(u);
    let pv = basis.eval_all(v);
    let polynomial: f64 = (0..3).map(|i| pu[i] * pv[i]).sum();

    let mut cross_u = 0.0;
    let mut cross_v = 0.0;
    for i in 0..3 {
        cross_u += pu[i] * r2_log_r(&basis.anchors[i], v);
        cross_v += pv[i] * r2_log_r(&basis.anchors[i], u);
    }
    // Symmetric bilinear form pu^T E pv.
    let mut anchor_term = 0.0;
    for i in 0..3 {
        anchor_term += pu[i] * pv[i] * basis.anchor_e[i][i];
        for j in (i + 1)..3 {
            anchor_term += (pu[i] * pv[j] + pu[j] * pv[i]) * basis.anchor_e[i][j];
        }
    }
    let energy = r2_log_r(u, v) - (cross_u + cross_v) + anchor_term;
    polynomial + energy / (8.0 * PI)
}

/// Kernel choice for gram assembly and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelBasis {
    ThinPlate(AnchorBasis),
    /// `exp(-|u - v|^2 / width^2)`.
    Gaussian { width: f64 },
}

impl KernelBasis {
    pub fn thin_plate(anchors: [Point2; 3]) -> Result<Self> {
        cardinal_polynomials(anchors).map(KernelBasis::ThinPlate)
    }

    pub fn gaussian(width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "gaussian width must be positive and finite, got {width}"
            )));
        }
        Ok(KernelBasis::Gaussian { width })
    }

    #[inline]
    pub fn eval(&self, u: &Point2, v: &Point2) -> f64 {
        match self {
            KernelBasis::ThinPlate(basis) => tps_kernel(u, v, basis),
            KernelBasis::Gaussian { width } => libm::exp(-u.dist_sq(v) / (width * width)),
        }
    }

    pub fn anchor_basis(&self) -> Option<&AnchorBasis> {
        match self {
            KernelBasis::ThinPlate(b) => Some(b),
            KernelBasis::Gaussian { .. } => None,
        }
    }
}
