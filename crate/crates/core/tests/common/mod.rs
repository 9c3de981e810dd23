#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use robust_recon_core::{GramMatrix, KernelBasis, Point2};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random orthogonal `n x n` matrix (QR of a Gaussian matrix).
pub fn orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    a.qr().q()
}

/// SPD matrix with eigenvalues log-spaced from 1 down to `1 / cond`.
pub fn spd_with_condition(rng: &mut ChaCha8Rng, n: usize, cond: f64) -> GramMatrix {
    let q = orthogonal(rng, n);
    let eig = DVector::from_fn(n, |i, _| {
        if n == 1 {
            1.0
        } else {
            cond.powf(-(i as f64) / (n - 1) as f64)
        }
    });
    let k = &q * DMatrix::from_diagonal(&eig) * q.transpose();
    GramMatrix::from_entries((&k + k.transpose()) * 0.5).unwrap()
}

/// Wishart-style SPD matrix, mildly conditioned.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> GramMatrix {
    let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let k = &a * a.transpose() / n as f64 + DMatrix::identity(n, n) * 0.1;
    GramMatrix::from_entries((&k + k.transpose()) * 0.5).unwrap()
}

pub fn random_diagonal(rng: &mut ChaCha8Rng, n: usize) -> GramMatrix {
    let d = DVector::from_fn(n, |_, _| rng.random_range(0.2..5.0));
    GramMatrix::from_entries(DMatrix::from_diagonal(&d)).unwrap()
}

/// Unit-triangle anchors followed by `n - 3` random points in `[-1, 2]^2`.
pub fn tps_nodes(rng: &mut ChaCha8Rng, n: usize) -> (KernelBasis, Vec<Point2>, GramMatrix) {
    let mut pts = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
    while pts.len() < n {
        let p = Point2::new(rng.random_range(-1.0..2.0), rng.random_range(-1.0..2.0));
        if pts.iter().all(|q| q.dist_sq(&p) > 1e-4) {
            pts.push(p);
        }
    }
    let kernel = KernelBasis::thin_plate([pts[0], pts[1], pts[2]]).unwrap();
    let g = GramMatrix::from_points(&pts, &kernel).unwrap();
    (kernel, pts, g)
}

pub fn rel_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
