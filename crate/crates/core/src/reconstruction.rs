//! Evaluable reconstructions `f(v) = sum_n h_n K(v, v_n)`.

use alloc::vec::Vec;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::gram::GramMatrix;
use crate::kernels::{KernelBasis, Point2};
use crate::solvers::FittedSolution;

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub kernel: KernelBasis,
    pub nodes: Vec<Point2>,
    pub coeffs: DVector<f64>,
    pub fitted: DVector<f64>,
    pub norm_sq: f64,
}

impl Reconstruction {
    pub fn new(kernel: KernelBasis, nodes: Vec<Point2>, solution: &FittedSolution) -> Result<Self> {
        if nodes.len() != solution.h_hat.len() {
            return Err(Error::DimensionMismatch {
                expected: nodes.len(),
                found: solution.h_hat.len(),
            });
        }
        Ok(Self {
            kernel,
            nodes,
            coeffs: solution.h_hat.clone(),
            fitted: solution.x_hat.clone(),
            norm_sq: solution.norm_sq,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn evaluate(&self, v: &Point2) -> f64 {
        self.nodes
            .iter()
            .zip(self.coeffs.iter())
            .map(|(node, &h)| h * self.kernel.eval(v, node))
            .sum()
    }

    /// Row-major values over the grid: row `i` has `y = y0 + i*dy`, column `j`
    /// has `x = x0 + j*dx`.
    pub fn evaluate_grid(&self, grid: &GridSpec) -> Grid {
        let mut values = Vec::with_capacity(grid.nx * grid.ny);
        for i in 0..grid.ny {
            for j in 0..grid.nx {
                values.push(self.evaluate(&grid.point(i, j)));
            }
        }
        Grid {
            spec: *grid,
            values,
        }
    }
}

/// `h^T K h`.
pub fn rkhs_norm_sq(coeffs: &DVector<f64>, g: &GramMatrix) -> Result<f64> {
    g.check_dim(coeffs)?;
    Ok(coeffs.dot(&g.mul(coeffs)).max(0.0))
}

/// Regular grid `[x0, x1] x [y0, y1]` with `nx` columns and `ny` rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x0: f64,
    pub x1: f64,
    pub nx: usize,
    pub y0: f64,
    pub y1: f64,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(x0: f64, x1: f64, nx: usize, y0: f64, y1: f64, ny: usize) -> Result<Self> {
        if !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite()) {
            return Err(Error::NonFinite("grid bounds"));
        }
        if !(x0 < x1 && y0 < y1) || nx < 2 || ny < 2 {
            return Err(Error::InvalidParameter(alloc::format!(
                "grid needs x0 < x1, y0 < y1 and at least 2x2 nodes, got [{x0}, {x1}] x [{y0}, {y1}] with {nx}x{ny}"
            )));
        }
        Ok(Self { x0, x1, nx, y0, y1, ny })
    }

    /// Grid node at row `i`, column `j`.
    pub fn point(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.x0 + j as f64 * (self.x1 - self.x0) / (self.nx - 1) as f64,
            self.y0 + i as f64 * (self.y1 - self.y0) / (self.ny - 1) as f64,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.spec.nx..(i + 1) * self.spec.nx]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.spec.nx + j]
    }
}
