//! Number formatting and grid output.

use std::io::{self, Write};

use rayon::prelude::*;
use robust_recon_core::{Grid, GridSpec, Reconstruction};

/// Shortest decimal that parses back to the same `f64`; scientific notation
/// outside `[1e-5, 1e16)`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Grid values with rows evaluated in parallel. Every value is computed by
/// the same sequence of operations as the serial path, so the result is
/// identical to [`Reconstruction::evaluate_grid`].
pub fn evaluate_grid_parallel(rec: &Reconstruction, spec: &GridSpec) -> Grid {
    let rows: Vec<Vec<f64>> = (0..spec.ny)
        .into_par_iter()
        .map(|i| (0..spec.nx).map(|j| rec.evaluate(&spec.point(i, j))).collect())
        .collect();
    Grid {
        spec: *spec,
        values: rows.concat(),
    }
}

/// `# x0,x1,nx,y0,y1,ny` then one line per grid row; row `i` has
/// `y = y0 + i * (y1 - y0) / (ny - 1)`.
pub fn write_grid<W: Write>(grid: &Grid, mut out: W) -> io::Result<()> {
    let s = &grid.spec;
    writeln!(
        out,
        "# {},{},{},{},{},{}",
        fmt_f64(s.x0),
        fmt_f64(s.x1),
        s.nx,
        fmt_f64(s.y0),
        fmt_f64(s.y1),
        s.ny
    )?;
    for i in 0..s.ny {
        let line: Vec<String> = grid.row(i).iter().map(|&v| fmt_f64(v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()
}
