//! Minimax robust reconstruction of scattered planar data in a reproducing
//! kernel Hilbert space.
//!
//! Given observation points `v_0..v_{N-1}`, a gram matrix `K` and a convex set
//! `C` of admissible observation vectors, the robust reconstruction is the
//! kernel expansion `f(v) = sum_n h_n K(v, v_n)` whose node values
//! `x = K h` form the element of `C` with the smallest norm `x^T K^-1 x`.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, CSV ingestion and
//! the command-line front end live in the `robust-recon` crate.
//!
//! Layout:
//!
//! * [`kernels`]: points, cardinal polynomials, the thin-plate-spline kernel.
//! * [`gram`]: gram matrix assembly with cached Cholesky and eigen factors.
//! * [`solvers`]: minimum-norm solvers per uncertainty set and the
//!   variational-inequality certificate.
//! * [`reconstruction`]: evaluable reconstructions and grids.
//! * [`oracle`]: slow brute-force references for testing the solvers.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

mod compensated;
pub mod error;
pub mod gram;
pub mod kernels;
pub mod oracle;
pub mod reconstruction;
pub mod solvers;

pub use nalgebra::{DMatrix, DVector};

pub use error::{Error, Result};
pub use gram::{gram_matrix, gram_solve, Eigen, GramMatrix};
pub use kernels::{cardinal_polynomials, tps_kernel, AnchorBasis, AffinePoly, KernelBasis, Point2};
pub use reconstruction::{rkhs_norm_sq, Grid, GridSpec, Reconstruction};
pub use solvers::{
    implied_delta, optimality_gap, pseudo_inverse_reconstruct, smoothing_spline, solve,
    solve_box, solve_eigenbox, solve_l1ball, solve_l2ball, solve_pgd, verify_optimality,
    worst_case_error, EigenInterval, FittedSolution, Method, Region, SolveOptions, SolveReport,
    UncertaintySpec,
};
