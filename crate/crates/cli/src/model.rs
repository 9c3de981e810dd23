//! The saved model: everything needed to evaluate and re-certify a fit.

use std::fs;
use std::path::Path;

use robust_recon_core::{
    optimality_gap, verify_optimality, DVector, EigenInterval, FittedSolution, GramMatrix, KernelBasis, Point2,
    Reconstruction, Region, SolveOptions, UncertaintySpec,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub nodes: Vec<[f64; 2]>,
    /// Kernel coefficients `h`.
    pub coeffs: Vec<f64>,
    /// Fitted node values `x = K h`.
    pub fitted: Vec<f64>,
    pub kernel: KernelSection,
    pub uncertainty: UncertaintySection,
    pub report: ReportSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSection {
    /// `thin-plate` or `gaussian`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_indices: Option<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySection {
    /// `interp`, `box`, `l2`, `l1` or `eigenbox`.
    pub kind: String,
    /// Nominal observations (sample means).
    pub center: Vec<f64>,
    /// Per-location sample standard deviations from ingestion.
    pub stds: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Eigen-coordinate intervals `[lo, hi]` as offsets from the center.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigen_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSection {
    pub method: String,
    pub norm_sq: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trivial: bool,
    pub tol: f64,
    pub feas_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub implied_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_case_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub small_delta_condition: Option<bool>,
}

/// Outcome of re-certifying a saved model against its own uncertainty set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    pub gap: f64,
    pub threshold: f64,
    pub violation: f64,
    pub feas_tol: f64,
    /// `|K h - x|_inf / (|K|_inf |h|_inf + |x|_inf)` for the stored pair.
    pub residual: f64,
}

/// Largest accepted relative mismatch between stored coefficients and fitted values.
pub const RESIDUAL_TOL: f64 = 1e-10;

impl Verification {
    pub fn passed(&self) -> bool {
        self.gap <= self.threshold && self.violation <= self.feas_tol && self.residual <= RESIDUAL_TOL
    }
}

fn pair(p: &Point2) -> [f64; 2] {
    [p.x, p.y]
}

fn point(p: &[f64; 2]) -> Point2 {
    Point2::new(p[0], p[1])
}

impl ModelFile {
    pub fn new(
        kernel: &KernelBasis,
        anchor_indices: Option<[usize; 3]>,
        nodes: &[Point2],
        stds: &[f64],
        spec: &UncertaintySpec,
        eigen_threshold: Option<f64>,
        sol: &FittedSolution,
        opts: &SolveOptions,
    ) -> Self {
        let kernel = match kernel {
            KernelBasis::ThinPlate(b) => KernelSection {
                kind: "thin-plate".into(),
                anchors: Some(b.anchors().iter().map(pair).collect()),
                anchor_indices,
                width: None,
            },
            KernelBasis::Gaussian { width } => KernelSection {
                kind: "gaussian".into(),
                anchors: None,
                anchor_indices: None,
                width: Some(*width),
            },
        };
        let mut uncertainty = UncertaintySection {
            kind: String::new(),
            center: spec.center.iter().copied().collect(),
            stds: stds.to_vec(),
            deltas: None,
            delta: None,
            intervals: None,
            eigen_threshold,
        };
        match &spec.region {
            Region::Point => uncertainty.kind = "interp".into(),
            Region::Box { deltas } => {
                uncertainty.kind = "box".into();
                uncertainty.deltas = Some(deltas.iter().copied().collect());
            }
            Region::L2Ball { delta } => {
                uncertainty.kind = "l2".into();
                uncertainty.delta = Some(*delta);
            }
            Region::L1Ball { delta } => {
                uncertainty.kind = "l1".into();
                uncertainty.delta = Some(*delta);
            }
            Region::EigenBox { intervals } => {
                uncertainty.kind = "eigenbox".into();
                uncertainty.intervals = Some(intervals.iter().map(|iv| [iv.lo, iv.hi]).collect());
            }
        }
        let r = &sol.report;
        ModelFile {
            schema_version: SCHEMA_VERSION,
            nodes: nodes.iter().map(pair).collect(),
            coeffs: sol.h_hat.iter().copied().collect(),
            fitted: sol.x_hat.iter().copied().collect(),
            kernel,
            uncertainty,
            report: ReportSection {
                method: r.method.name().into(),
                norm_sq: sol.norm_sq,
                gap: r.gap,
                iterations: r.iterations,
                converged: r.converged,
                trivial: r.trivial,
                tol: opts.tol,
                feas_tol: opts.feas_tol,
                lambda: r.lambda,
                implied_delta: r.implied_delta,
                tau: r.tau,
                norm_bound: opts.norm_bound,
                worst_case_error: r.worst_case_error,
                small_delta_condition: r.small_delta_condition,
            },
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Model(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let model: ModelFile = toml::from_str(text).map_err(|e| CliError::Model(e.to_string()))?;
        model.check()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml()?).map_err(CliError::io(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::from_toml(&text)
    }

    fn check(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Model(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let n = self.nodes.len();
        let u = &self.uncertainty;
        let lens = [
            ("coeffs", self.coeffs.len()),
            ("fitted", self.fitted.len()),
            ("center", u.center.len()),
            ("stds", u.stds.len()),
            ("deltas", u.deltas.as_ref().map_or(n, Vec::len)),
            ("intervals", u.intervals.as_ref().map_or(n, Vec::len)),
        ];
        if let Some((name, len)) = lens.iter().find(|(_, len)| *len != n) {
            return Err(CliError::Model(format!("{name} has {len} entries but there are {n} nodes")));
        }
        Ok(())
    }

    pub fn kernel_basis(&self) -> Result<KernelBasis> {
        let k = &self.kernel;
        match k.kind.as_str() {
            "thin-plate" => {
                let a = k
                    .anchors
                    .as_ref()
                    .filter(|a| a.len() == 3)
                    .ok_or_else(|| CliError::Model("thin-plate kernel needs three anchors".into()))?;
                Ok(KernelBasis::thin_plate([point(&a[0]), point(&a[1]), point(&a[2])])?)
            }
            "gaussian" => {
                let w = k.width.ok_or_else(|| CliError::Model("gaussian kernel needs a width".into()))?;
                Ok(KernelBasis::gaussian(w)?)
            }
            other => Err(CliError::Model(format!("unknown kernel kind `{other}`"))),
        }
    }

    pub fn node_points(&self) -> Vec<Point2> {
        self.nodes.iter().map(point).collect()
    }

    pub fn gram(&self) -> Result<GramMatrix> {
        Ok(GramMatrix::from_points(&self.node_points(), &self.kernel_basis()?)?)
    }

    pub fn spec(&self) -> Result<UncertaintySpec> {
        let u = &self.uncertainty;
        let center = DVector::from_column_slice(&u.center);
        let missing = |what: &str| CliError::Model(format!("`{}` uncertainty needs `{what}`", u.kind));
        Ok(match u.kind.as_str() {
            "interp" => UncertaintySpec::point(center),
            "box" => UncertaintySpec::boxed(center, DVector::from_column_slice(u.deltas.as_ref().ok_or_else(|| missing("deltas"))?)),
            "l2" => UncertaintySpec::l2_ball(center, u.delta.ok_or_else(|| missing("delta"))?),
            "l1" => UncertaintySpec::l1_ball(center, u.delta.ok_or_else(|| missing("delta"))?),
            "eigenbox" => UncertaintySpec::eigen_box(
                center,
                u.intervals
                    .as_ref()
                    .ok_or_else(|| missing("intervals"))?
                    .iter()
                    .map(|&[lo, hi]| EigenInterval { lo, hi })
                    .collect(),
            ),
            other => return Err(CliError::Model(format!("unknown uncertainty kind `{other}`"))),
        })
    }

    pub fn reconstruction(&self) -> Result<Reconstruction> {
        Ok(Reconstruction {
            kernel: self.kernel_basis()?,
            nodes: self.node_points(),
            coeffs: DVector::from_column_slice(&self.coeffs),
            fitted: DVector::from_column_slice(&self.fitted),
            norm_sq: self.report.norm_sq,
        })
    }

    /// Recomputes the optimality gap of the stored fit from scratch. Most sets
    /// use `h = K^-1 x` from the fitted values alone. Eigen-boxes use the stored
    /// `(x, h)` pair, since recomputing `h` amplifies rounding in `x` along the
    /// smallest eigen-directions by `1 / lambda_min`; the pair is checked for
    /// consistency instead.
    pub fn verify(&self, tol: Option<f64>) -> Result<Verification> {
        let g = self.gram()?;
        let spec = self.spec()?;
        spec.validate(g.dim())?;
        let x = DVector::from_column_slice(&self.fitted);
        let h = DVector::from_column_slice(&self.coeffs);
        let (gap, norm_sq) = if matches!(spec.region, Region::EigenBox { .. }) {
            (optimality_gap(&g, &spec, &x, &h), h.dot(&x))
        } else {
            let gap = verify_optimality(&g, &x, &spec);
            (gap, x.dot(&g.solve(&x)))
        };
        let k_norm = g.entries().row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let scale = k_norm * h.amax() + x.amax();
        let residual = if scale > 0.0 { (g.mul(&h) - &x).amax() / scale } else { 0.0 };
        Ok(Verification {
            gap,
            threshold: tol.unwrap_or(self.report.tol) * norm_sq.max(1.0),
            violation: spec.violation(&g, &x),
            feas_tol: self.report.feas_tol,
            residual,
        })
    }
}
