//! Gram matrices with cached factorizations.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use once_cell::race::OnceBox;

use crate::compensated;
use crate::error::{Error, Result};
use crate::kernels::{KernelBasis, Point2};

/// Relative symmetry tolerance for user-supplied matrices.
const SYMMETRY_TOL: f64 = 1e-12;

/// Eigen-decomposition `K = V diag(values) V^T`, eigenvalues in descending
/// order. Each eigenvector is signed so that its largest-magnitude entry is
/// positive.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigen {
    fn of(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let raw = m.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| raw.eigenvalues[b].total_cmp(&raw.eigenvalues[a]));
        let values = DVector::from_iterator(n, order.iter().map(|&i| raw.eigenvalues[i]));
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            let col = raw.eigenvectors.column(src);
            let pivot = col.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            vectors.set_column(dst, &(col * sign));
        }
        Eigen { values, vectors }
    }

    /// Eigen-coordinates `V^T x`.
    pub fn to_eigen(&self, x: &DVector<f64>) -> DVector<f64> {
        self.vectors.tr_mul(x)
    }

    /// Observation-space vector `V w`.
    pub fn from_eigen(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.vectors * w
    }

    pub fn lambda_max(&self) -> f64 {
        self.values[0]
    }

    pub fn lambda_min(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Symmetric positive-definite gram matrix `K[i][j] = K(v_i, v_j)`.
///
/// The Cholesky factor is computed at construction. The eigen-decomposition
/// is computed on first use and shared afterwards.
pub struct GramMatrix {
    points: Vec<Point2>,
    entries: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    eigen: OnceBox<Eigen>,
}

impl GramMatrix {
    /// Assembles the gram matrix of `kernel` over `points`.
    pub fn from_points(points: &[Point2], kernel: &KernelBasis) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::InvalidParameter("gram matrix needs at least one point".into()));
        }
        if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if points[i].coincides(&points[j]) {
                    return Err(Error::Singular(format!("points {i} and {j} coincide")));
                }
            }
        }
        let mut entries = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let k = kernel.eval(&points[i], &points[j]);
                entries[(i, j)] = k;
                entries[(j, i)] = k;
            }
        }
        Self::factor(points.to_vec(), entries)
    }

    /// Wraps an explicit symmetric positive-definite matrix (no node points).
    pub fn from_entries(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: entries.ncols(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gram entries"));
        }
        let scale = entries.amax();
        for j in 0..n {
            for i in 0..j {
                if (entries[(i, j)] - entries[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidParameter(format!(
                        "gram matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Self::factor(Vec::new(), entries)
    }

    fn factor(points: Vec<Point2>, entries: DMatrix<f64>) -> Result<Self> {
        let chol = Cholesky::new(entries.clone())
            .ok_or_else(|| Error::Singular("Cholesky factorization failed".into()))?;
        Ok(Self {
            points,
            entries,
            chol,
            eigen: OnceBox::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Lower-triangular Cholesky factor.
    pub fn cholesky_l(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn mul(&self, h: &DVector<f64>) -> DVector<f64> {
        &self.entries * h
    }

    /// `K^-1 rhs`, iteratively refined against extended-precision residuals.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        compensated::refine(&self.entries, rhs, 2, |r| self.chol.solve(r))
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    pub fn eigen(&self) -> &Eigen {
        self.eigen.get_or_init(|| Box::new(Eigen::of(&self.entries)))
    }

    pub fn condition_number(&self) -> f64 {
        let e = self.eigen();
        e.lambda_max() / e.lambda_min()
    }

    pub(crate) fn check_dim(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(())
    }
}

impl Clone for GramMatrix {
    fn clone(&self) -> Self {
        let eigen = OnceBox::new();
        if let Some(e) = self.eigen.get() {
            let _ = eigen.set(Box::new(e.clone()));
        }
        Self {
            points: self.points.clone(),
            entries: self.entries.clone(),
            chol: self.chol.clone(),
            eigen,
        }
    }
}

impl fmt::Debug for GramMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GramMatrix")
            .field("dim", &self.dim())
            .field("entries", &self.entries)
            .finish_non_exhaustive()
    }
}

pub fn gram_matrix(points: &[Point2], kernel: &KernelBasis) -> Result<GramMatrix> {
    GramMatrix::from_points(points, kernel)
}

/// Solves `K w = rhs` through the cached factorization.
pub fn gram_solve(g: &GramMatrix, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    g.check_dim(rhs)?;
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("right-hand side"));
    }
    Ok(g.solve(rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::cardinal_polynomials;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tps_unit() -> KernelBasis {
        KernelBasis::ThinPlate(
            cardinal_polynomials([Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)])
                .unwrap(),
        )
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point2> {
        let mut pts = alloc::vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        while pts.len() < n {
            pts.push(Point2::new(rng.random_range(-2.0..3.0), rng.random_range(-2.0..3.0)));
        }
        pts.truncate(n);
        pts
    }

    // Plain Jacobi sweeps; only used to check the minimum eigenvalue.
    fn jacobi_min_eigenvalue(m: &DMatrix<f64>) -> f64 {
        let mut a = m.clone();
        let n = a.nrows();
        for _ in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)] * a[(p, q)];
                    if a[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
            if off < 1e-30 {
                break;
            }
        }
        (0..n).map(|i| a[(i, i)]).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn anchors_only_gram_is_identity() {
        let pts = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        let g = gram_matrix(&pts, &tps_unit()).unwrap();
        let diff = g.entries() - DMatrix::<f64>::identity(3, 3);
        assert!(diff.amax() < 1e-15, "{}", g.entries());
    }

    #[test]
    fn duplicate_point_is_singular() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(0.5, 0.5),
            Point2::new(0.5, 0.5 + 1e-13),
        ];
        assert!(matches!(gram_matrix(&pts, &tps_unit()), Err(Error::Singular(_))));
    }

    #[test]
    fn random_gram_is_positive_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = random_points(&mut rng, 6);
        let g = gram_matrix(&pts, &tps_unit()).unwrap();
        let lmin = jacobi_min_eigenvalue(g.entries());
        assert!(lmin > 0.0, "{lmin}");
        assert!((g.eigen().lambda_min() - lmin).abs() <= 1e-10 * g.eigen().lambda_max());
    }

    #[test]
    fn gram_symmetric_and_factorizable_up_to_50() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [3usize, 7, 20, 50] {
            let pts = random_points(&mut rng, n);
            let g = gram_matrix(&pts, &tps_unit()).unwrap();
            let k = g.entries();
            assert_eq!(k, &k.transpose());
        }
    }

    #[test]
    fn solve_identity_and_columns() {
        let g = GramMatrix::from_entries(DMatrix::identity(3, 3)).unwrap();
        let r = DVector::from_vec(alloc::vec![1.0, -2.0, 3.5]);
        assert_eq!(gram_solve(&g, &r).unwrap(), r);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts = random_points(&mut rng, 8);
        let g = gram_matrix(&pts, &tps_unit()).unwrap();
        for i in 0..8 {
            let col = g.entries().column(i).into_owned();
            let w = gram_solve(&g, &col).unwrap();
            for j in 0..8 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((w[j] - want).abs() < 1e-9, "{w}");
            }
        }
    }

    #[test]
    fn solve_residual_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in [2usize, 5, 12] {
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let k = &a * a.transpose() + DMatrix::identity(n, n) * 0.1;
            let g = GramMatrix::from_entries(k.clone()).unwrap();
            let rhs = DVector::from_fn(n, |_, _| rng.random_range(-5.0..5.0));
            let w = gram_solve(&g, &rhs).unwrap();
            assert!((&k * &w - &rhs).norm() <= 1e-10 * rhs.norm());
        }
    }

    #[test]
    fn dimension_and_symmetry_errors() {
        let g = GramMatrix::from_entries(DMatrix::identity(2, 2)).unwrap();
        assert!(matches!(
            gram_solve(&g, &DVector::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(GramMatrix::from_entries(m).is_err());
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(GramMatrix::from_entries(m), Err(Error::Singular(_))));
    }

    #[test]
    fn eigen_sorted_descending_and_reconstructs() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 3.0, 0.1, 0.0, 0.1, 1.0]);
        let g = GramMatrix::from_entries(m.clone()).unwrap();
        let e = g.eigen();
        assert!(e.values[0] >= e.values[1] && e.values[1] >= e.values[2]);
        let back = &e.vectors * DMatrix::from_diagonal(&e.values) * e.vectors.transpose();
        assert!((back - m).amax() < 1e-13);
    }
}
