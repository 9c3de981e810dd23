mod common;

use approx::assert_abs_diff_eq;
use common::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use robust_recon_core::{
    cardinal_polynomials, solve, tps_kernel, Error, GramMatrix, GridSpec, KernelBasis, Point2, Reconstruction,
    SolveOptions, UncertaintySpec,
};

fn random_triangle(r: &mut rand_chacha::ChaCha8Rng) -> [Point2; 3] {
    loop {
        let t = [0, 1, 2].map(|_| Point2::new(r.random_range(-5.0..5.0), r.random_range(-5.0..5.0)));
        if cardinal_polynomials(t).is_ok() {
            return t;
        }
    }
}

#[test]
fn cardinal_polynomials_are_kronecker_at_anchors() {
    let mut r = rng(31);
    for _ in 0..50 {
        let anchors = random_triangle(&mut r);
        let basis = cardinal_polynomials(anchors).unwrap();
        for (i, p) in basis.polys().iter().enumerate() {
            for (j, a) in anchors.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(p.eval(a), want, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn kernel_at_an_anchor_is_its_cardinal_polynomial() {
    let mut r = rng(32);
    for _ in 0..10 {
        let anchors = random_triangle(&mut r);
        let basis = cardinal_polynomials(anchors).unwrap();
        for _ in 0..100 {
            let v = Point2::new(r.random_range(-8.0..8.0), r.random_range(-8.0..8.0));
            for (a, p) in anchors.iter().zip(basis.polys()) {
                assert_abs_diff_eq!(tps_kernel(a, &v, &basis), p.eval(&v), epsilon = 1e-10);
            }
        }
    }
}

#[test]
fn anchor_gram_is_identity() {
    let mut r = rng(33);
    for _ in 0..20 {
        let anchors = random_triangle(&mut r);
        let kernel = KernelBasis::thin_plate(anchors).unwrap();
        let g = GramMatrix::from_points(&anchors, &kernel).unwrap();
        assert!((g.entries() - DMatrix::identity(3, 3)).amax() <= 1e-10);
    }
}

#[test]
fn kernel_is_symmetric() {
    let mut r = rng(34);
    let basis = cardinal_polynomials(random_triangle(&mut r)).unwrap();
    for _ in 0..500 {
        let u = Point2::new(r.random_range(-10.0..10.0), r.random_range(-10.0..10.0));
        let v = Point2::new(r.random_range(-10.0..10.0), r.random_range(-10.0..10.0));
        let (a, b) = (tps_kernel(&u, &v, &basis), tps_kernel(&v, &u, &basis));
        assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }
}

#[test]
fn collinear_anchors_are_rejected() {
    let line = [Point2::new(0.0, 0.0), Point2::new(1.0, 1.0), Point2::new(3.0, 3.0)];
    assert!(matches!(cardinal_polynomials(line), Err(Error::Unisolvent { .. })));
}

#[test]
fn interpolant_reproduces_observations_at_nodes() {
    let mut r = rng(35);
    for n in [3, 8, 20, 40] {
        let (kernel, pts, g) = tps_nodes(&mut r, n);
        let z = normal_vec(&mut r, n);
        let sol = solve(&g, &UncertaintySpec::point(z.clone()), &SolveOptions::default()).unwrap();
        let h = g.entries().clone().lu().solve(&z).unwrap();
        assert!((&sol.h_hat - &h).norm() <= 1e-10 * h.norm());
        let rec = Reconstruction::new(kernel, pts.clone(), &sol).unwrap();
        for (p, &zi) in pts.iter().zip(z.iter()) {
            assert_abs_diff_eq!(rec.evaluate(p), zi, epsilon = 1e-8);
        }
    }
}

#[test]
fn affine_data_is_reproduced_everywhere() {
    // Affine functions lie in the span of the cardinal polynomials, which the
    // kernels at the anchors reproduce.
    let mut r = rng(36);
    let (kernel, pts, g) = tps_nodes(&mut r, 15);
    let f = |p: &Point2| 0.5 - 1.5 * p.x + 2.0 * p.y;
    let z = DVector::from_iterator(pts.len(), pts.iter().map(f));
    let sol = solve(&g, &UncertaintySpec::point(z), &SolveOptions::default()).unwrap();
    let rec = Reconstruction::new(kernel, pts, &sol).unwrap();
    let grid = rec.evaluate_grid(&GridSpec::new(-2.0, 3.0, 7, -1.0, 2.0, 5).unwrap());
    for i in 0..5 {
        for j in 0..7 {
            let p = grid.spec.point(i, j);
            assert_abs_diff_eq!(grid.get(i, j), f(&p), epsilon = 1e-8);
        }
    }
}
