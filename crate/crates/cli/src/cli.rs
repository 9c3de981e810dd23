//! Command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use robust_recon_core::{
    smoothing_spline, solve, DVector, EigenInterval, Error as CoreError, GramMatrix, GridSpec, KernelBasis, Point2,
    SolveOptions, UncertaintySpec,
};

use crate::anchors::{select_anchors, AnchorStrategy};
use crate::error::{CliError, Result};
use crate::ingest::ingest_csv;
use crate::model::ModelFile;
use crate::output::{evaluate_grid_parallel, fmt_f64, write_grid};
use crate::synth::{self, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "robust-recon", version, about = "Minimax robust reconstruction of scattered planar data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to `x,y,value` observations.
    Fit(FitArgs),
    /// Evaluate a model at points.
    Eval(EvalArgs),
    /// Evaluate a model on a regular grid.
    Grid(GridArgs),
    /// Recompute the optimality certificate of a saved model.
    Verify(VerifyArgs),
    /// Summarize a saved model.
    Info(InfoArgs),
    /// Write a seeded synthetic survey as `x,y,value` CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Uncertainty {
    Interp,
    Box,
    L2,
    L1,
    Eigenbox,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelChoice {
    ThinPlate,
    Gaussian(f64),
}

impl FromStr for KernelChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "tps" | "thin-plate" => Ok(KernelChoice::ThinPlate),
            _ => match s.strip_prefix("gaussian:").map(str::parse::<f64>) {
                Some(Ok(w)) if w.is_finite() && w > 0.0 => Ok(KernelChoice::Gaussian(w)),
                _ => Err(format!("expected `tps` or `gaussian:<width>`, got `{s}`")),
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input CSV (`-` for standard input).
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "interp")]
    pub uncertainty: Uncertainty,
    /// Uniform box half-width, ball radius, or eigen half-width of the stable modes.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Box half-widths `c * std_i`; ball radius `c * |std|` in the matching norm.
    #[arg(long)]
    pub delta_scale: Option<f64>,
    /// Smoothing parameter; fits the smoothing spline (an l2 ball of implied radius).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Eigen-modes below this fraction of the largest eigenvalue are left unconstrained (eigenbox).
    #[arg(long, default_value_t = 0.0)]
    pub eigen_threshold: f64,
    /// `min-std`, `max-area` or three indices `i,j,k`.
    #[arg(long, default_value = "min-std")]
    pub anchors: AnchorStrategy,
    /// `tps` or `gaussian:<width>`.
    #[arg(long, default_value = "tps")]
    pub kernel: KernelChoice,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 200_000)]
    pub max_iter: usize,
    /// Bound `M` on the squared norm; reports the worst-case error `M - norm`.
    #[arg(long)]
    pub norm_bound: Option<f64>,
    /// Accepted for symmetry with `grid`; fitting is always serial.
    #[arg(long)]
    pub deterministic: bool,
    /// Model file to write; the model goes to standard output otherwise.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub model: PathBuf,
    /// CSV with header `x,y`.
    #[arg(long, conflicts_with = "at")]
    pub points: Option<PathBuf>,
    /// A point `x,y`; may be repeated.
    #[arg(long, allow_hyphen_values = true)]
    pub at: Vec<String>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    pub model: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub x1: f64,
    #[arg(long)]
    pub nx: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub y0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub y1: f64,
    #[arg(long)]
    pub ny: usize,
    /// Evaluate serially.
    #[arg(long)]
    pub deterministic: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub model: PathBuf,
    /// Gap tolerance relative to `max(1, norm)`; defaults to the fit tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 107)]
    pub locations: usize,
    #[arg(long, default_value_t = 100)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = if std::env::var_os("NO_COLOR").is_some() || code == 1 {
                e.to_string()
            } else {
                e.render().ansi().to_string()
            };
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{text}");
            return code;
        }
    };
    match run(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            if let CliError::Core(CoreError::NoConvergence { gap, iterations, .. }) = &e {
                let _ = writeln!(err, "error: solver stopped after {iterations} iterations with gap {}", fmt_f64(*gap));
            } else {
                let _ = writeln!(err, "error: {e}");
            }
            e.exit_code()
        }
    }
}

pub fn run(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::Fit(a) => fit(a, out, err),
        Command::Eval(a) => eval(a, out),
        Command::Grid(a) => grid(a, out),
        Command::Verify(a) => verify(a, out),
        Command::Info(a) => info(a, out),
        Command::Synth(a) => synth_cmd(a, out),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn open_input(path: &Path) -> Result<Box<dyn Read>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(io::stdin()))
    } else {
        Ok(Box::new(BufReader::new(File::open(path).map_err(CliError::io(path))?)))
    }
}

fn with_output(path: &Option<PathBuf>, out: &mut dyn Write, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(CliError::io(p))?;
            let mut w = BufWriter::new(file);
            f(&mut w).map_err(CliError::io(p))
        }
        None => f(out).map_err(CliError::io("<stdout>")),
    }
}

fn check_nonneg(name: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(v) if !(v.is_finite() && v >= 0.0) => Err(usage(format!("--{name} must be finite and non-negative, got {v}"))),
        _ => Ok(()),
    }
}

fn build_spec(a: &FitArgs, g: &GramMatrix, z: DVector<f64>, stds: &DVector<f64>) -> Result<UncertaintySpec> {
    if a.delta.is_some() && a.delta_scale.is_some() {
        return Err(usage("--delta and --delta-scale are mutually exclusive"));
    }
    let radius = |norm: f64| a.delta.or(a.delta_scale.map(|c| c * norm));
    Ok(match a.uncertainty {
        Uncertainty::Interp => {
            if a.delta.is_some() || a.delta_scale.is_some() {
                return Err(usage("--uncertainty interp takes no --delta or --delta-scale"));
            }
            UncertaintySpec::point(z)
        }
        Uncertainty::Box => {
            let deltas = match a.delta {
                Some(d) => DVector::from_element(z.len(), d),
                None => stds * a.delta_scale.unwrap_or(1.0),
            };
            UncertaintySpec::boxed(z, deltas)
        }
        Uncertainty::L2 => {
            let r = radius(stds.norm()).ok_or_else(|| usage("--uncertainty l2 needs --delta or --delta-scale"))?;
            UncertaintySpec::l2_ball(z, r)
        }
        Uncertainty::L1 => {
            let r = radius(stds.lp_norm(1)).ok_or_else(|| usage("--uncertainty l1 needs --delta or --delta-scale"))?;
            UncertaintySpec::l1_ball(z, r)
        }
        Uncertainty::Eigenbox => {
            if a.delta_scale.is_some() {
                return Err(usage("--uncertainty eigenbox takes --delta, not --delta-scale"));
            }
            if !(0.0..1.0).contains(&a.eigen_threshold) {
                return Err(usage(format!("--eigen-threshold must lie in [0, 1), got {}", a.eigen_threshold)));
            }
            let e = g.eigen();
            let cut = a.eigen_threshold * e.lambda_max();
            let stable = EigenInterval::symmetric(a.delta.unwrap_or(0.0));
            let intervals = e
                .values
                .iter()
                .map(|&l| if a.eigen_threshold > 0.0 && l < cut { EigenInterval::UNBOUNDED } else { stable })
                .collect();
            UncertaintySpec::eigen_box(z, intervals)
        }
    })
}

fn fit(a: FitArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    check_nonneg("delta", a.delta)?;
    check_nonneg("delta-scale", a.delta_scale)?;
    check_nonneg("lambda", a.lambda)?;
    if !(a.tol.is_finite() && a.tol > 0.0) {
        return Err(usage(format!("--tol must be positive, got {}", a.tol)));
    }
    if a.lambda.is_some() && !matches!(a.uncertainty, Uncertainty::Interp | Uncertainty::L2) {
        return Err(usage("--lambda fits a smoothing spline and cannot be combined with this --uncertainty"));
    }
    if a.lambda.is_some() && (a.delta.is_some() || a.delta_scale.is_some()) {
        return Err(usage("--lambda replaces --delta/--delta-scale"));
    }

    let obs = ingest_csv(open_input(&a.input)?)?;
    let (kernel, anchor_indices) = match a.kernel {
        KernelChoice::ThinPlate => {
            let idx = select_anchors(&obs, a.anchors)?;
            let p = &obs.locations;
            (KernelBasis::thin_plate([p[idx[0]], p[idx[1]], p[idx[2]]])?, Some(idx))
        }
        KernelChoice::Gaussian(w) => (KernelBasis::gaussian(w)?, None),
    };
    let g = GramMatrix::from_points(&obs.locations, &kernel)?;
    let opts = SolveOptions {
        tol: a.tol,
        max_iter: a.max_iter,
        norm_bound: a.norm_bound,
        ..Default::default()
    };
    let z = obs.nominal();
    let stds = obs.std_vector();
    let (spec, sol, threshold) = match a.lambda {
        Some(lambda) => {
            let sol = smoothing_spline(&g, &z, lambda, &opts)?;
            let delta = sol.report.implied_delta.unwrap_or(0.0);
            (UncertaintySpec::l2_ball(z, delta), sol, None)
        }
        None => {
            let spec = build_spec(&a, &g, z, &stds)?;
            let sol = solve(&g, &spec, &opts)?;
            let thr = (a.uncertainty == Uncertainty::Eigenbox).then_some(a.eigen_threshold);
            (spec, sol, thr)
        }
    };
    let model = ModelFile::new(&kernel, anchor_indices, &obs.locations, &obs.stds, &spec, threshold, &sol, &opts);
    match &a.output {
        Some(path) => {
            model.save(path)?;
            write_summary(&model, Some(g.condition_number()), out).map_err(CliError::io("<stdout>"))
        }
        None => {
            out.write_all(model.to_toml()?.as_bytes()).map_err(CliError::io("<stdout>"))?;
            write_summary(&model, Some(g.condition_number()), err).map_err(CliError::io("<stderr>"))
        }
    }
}

fn write_summary(m: &ModelFile, condition: Option<f64>, w: &mut dyn Write) -> io::Result<()> {
    let r = &m.report;
    writeln!(w, "nodes: {}", m.nodes.len())?;
    writeln!(w, "kernel: {}", m.kernel.kind)?;
    if let Some(idx) = m.kernel.anchor_indices {
        writeln!(w, "anchors: {},{},{}", idx[0], idx[1], idx[2])?;
    }
    writeln!(w, "uncertainty: {}", m.uncertainty.kind)?;
    writeln!(w, "method: {}", r.method)?;
    writeln!(w, "norm_sq: {}", fmt_f64(r.norm_sq))?;
    writeln!(w, "gap: {}", fmt_f64(r.gap))?;
    writeln!(w, "iterations: {}", r.iterations)?;
    let optional = [
        ("lambda", r.lambda),
        ("implied_delta", r.implied_delta),
        ("tau", r.tau),
        ("norm_bound", r.norm_bound),
        ("worst_case_error", r.worst_case_error),
        ("condition_number", condition),
    ];
    for (name, v) in optional {
        if let Some(v) = v {
            writeln!(w, "{name}: {}", fmt_f64(v))?;
        }
    }
    if let Some(s) = r.small_delta_condition {
        writeln!(w, "small_delta_condition: {s}")?;
    }
    if r.trivial {
        writeln!(w, "trivial: true")?;
    }
    Ok(())
}

fn parse_point(s: &str) -> Result<Point2> {
    let coords: Vec<&str> = s.split(',').map(str::trim).collect();
    let parsed = match coords[..] {
        [x, y] => x.parse::<f64>().ok().zip(y.parse::<f64>().ok()),
        _ => None,
    };
    parsed
        .and_then(|(x, y)| Point2::try_new(x, y).ok())
        .ok_or_else(|| usage(format!("expected a point `x,y`, got `{s}`")))
}

fn read_points(path: &Path) -> Result<Vec<Point2>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open_input(path)?);
    let data_err = |msg: String| CliError::Ingest(crate::ingest::IngestError::Parse { line: 0, column: 0, message: msg });
    let header = rdr.headers().map_err(|e| data_err(e.to_string()))?;
    if header.iter().map(|h| h.to_ascii_lowercase()).collect::<Vec<_>>() != ["x", "y"] {
        return Err(data_err(format!("{}: expected header `x,y`", path.display())));
    }
    let mut pts = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| data_err(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let x = rec[0].parse::<f64>();
        let y = rec[1].parse::<f64>();
        match (x, y) {
            (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => pts.push(Point2::new(x, y)),
            _ => return Err(data_err(format!("line {line}: invalid point `{},{}`", &rec[0], &rec[1]))),
        }
    }
    Ok(pts)
}

fn eval(a: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let model = ModelFile::load(&a.model)?;
    let rec = model.reconstruction()?;
    let pts = match &a.points {
        Some(path) => read_points(path)?,
        None if a.at.is_empty() => return Err(usage("eval needs --points <csv> or at least one --at x,y")),
        None => a.at.iter().map(|s| parse_point(s)).collect::<Result<_>>()?,
    };
    with_output(&a.output, out, |w| {
        writeln!(w, "x,y,value")?;
        for p in &pts {
            writeln!(w, "{},{},{}", fmt_f64(p.x), fmt_f64(p.y), fmt_f64(rec.evaluate(p)))?;
        }
        w.flush()
    })
}

fn grid(a: GridArgs, out: &mut dyn Write) -> Result<()> {
    let spec = GridSpec::new(a.x0, a.x1, a.nx, a.y0, a.y1, a.ny).map_err(|e| usage(e.to_string()))?;
    let model = ModelFile::load(&a.model)?;
    let rec = model.reconstruction()?;
    let values = if a.deterministic {
        rec.evaluate_grid(&spec)
    } else {
        evaluate_grid_parallel(&rec, &spec)
    };
    with_output(&a.output, out, |w| write_grid(&values, w))
}

fn verify(a: VerifyArgs, out: &mut dyn Write) -> Result<()> {
    if let Some(t) = a.tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(usage(format!("--tol must be positive, got {t}")));
        }
    }
    let model = ModelFile::load(&a.model)?;
    let v = model.verify(a.tol)?;
    let status = if v.passed() { "ok" } else { "FAILED" };
    writeln!(
        out,
        "{status}: gap {} (threshold {}), violation {} (tolerance {}), residual {} (tolerance {})",
        fmt_f64(v.gap),
        fmt_f64(v.threshold),
        fmt_f64(v.violation),
        fmt_f64(v.feas_tol),
        fmt_f64(v.residual),
        fmt_f64(crate::model::RESIDUAL_TOL)
    )
    .map_err(CliError::io("<stdout>"))?;
    if v.passed() {
        Ok(())
    } else {
        Err(CliError::VerifyFailed {
            gap: v.gap,
            threshold: v.threshold,
            violation: v.violation,
            residual: v.residual,
        })
    }
}

fn info(a: InfoArgs, out: &mut dyn Write) -> Result<()> {
    let model = ModelFile::load(&a.model)?;
    let g = model.gram()?;
    write_summary(&model, Some(g.condition_number()), out).map_err(CliError::io("<stdout>"))
}

fn synth_cmd(a: SynthArgs, out: &mut dyn Write) -> Result<()> {
    if a.locations < 3 || a.repeats == 0 {
        return Err(usage("synth needs at least 3 locations and 1 repeat"));
    }
    let survey = synth::generate(&SynthConfig {
        locations: a.locations,
        repeats: a.repeats,
        seed: a.seed,
        ..Default::default()
    });
    with_output(&a.output, out, |w| synth::write_csv(&survey, w))
}
