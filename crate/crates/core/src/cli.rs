//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage/parse/domain errors, 2 a non-elliptic
//! node in `analyze` or a failed `verify`. `beltrami` and `bench` exit 0 when
//! the baseline diverges.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::{
    default_rigidity_tol, degeneration_table, scan_region, write_table_csv, RegionScanReport,
    DEFAULT_SCAN_NODES,
};
use crate::beltrami::{
    contraction_estimate, near_divergent, solve_beltrami_neumann, BeltramiDescriptor,
    BeltramiProblem, TorusGrid, DEFAULT_DIVERGENCE_FACTOR, DEFAULT_HALF_WIDTH, DEFAULT_MARGIN,
    DEFAULT_MAX_ITER, DEFAULT_N, DEFAULT_TOL,
};
use crate::bench::{emit_report, run_benchmark, BenchConfig, ReportFormat};
use crate::error::{Error, Result};
use crate::fields::{
    CoefficientField, DeltaFamily, GridSpec, GridTableField, PerturbedDeltaFamily, Region,
};
use crate::numfmt::sig6;
use crate::transport::{
    solve_characteristic, system_residual, to_real_pair, transport_residual,
    transport_residual_analytic, ComplexField, DerivativeMode, FieldHeader, InitialData,
    InteriorGrid, RealPairField, DOMAIN_NOTE, INITIAL_DATA_GRAMMAR,
};

pub const DEFAULT_SOLVE_NODES: usize = 257;
pub const DEFAULT_VERIFY_THRESHOLD: f64 = 1e-6;
/// Observed order above which a residual counts as discretisation error.
pub const MIN_CONVERGENCE_ORDER: f64 = 1.5;
pub const ANALYZE_CSV_HEADER: &str = "delta,inf_mu,sup_mu,kappa,max_abs_A,max_abs_B,rigid";

#[derive(Parser, Debug)]
#[command(
    name = "rigidity",
    version,
    about = "Transport-obstruction triage and exact solvers for degenerate planar elliptic systems"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scan a coefficient field: |mu| range, condition number, obstruction.
    Analyze(AnalyzeArgs),
    /// The degeneration table of the delta-family on K.
    Table1(Table1Args),
    /// Solve the delta-family system by characteristics.
    #[command(after_help = INITIAL_DATA_GRAMMAR)]
    Solve(SolveArgs),
    /// Finite-difference residual of a solution file.
    Verify(VerifyArgs),
    /// Neumann iteration for the Beltrami equation.
    ///
    /// The trace CSV goes to stdout and the verdict line to stderr.
    Beltrami(BeltramiArgs),
    /// Sweep delta: characteristic cost and accuracy against the baseline.
    Bench(BenchArgs),
}

fn parse_region(s: &str) -> std::result::Result<Region, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| format!("expected x0,x1,y0,y1, got `{s}`"))?;
    let [x0, x1, y0, y1] = v[..] else {
        return Err(format!("expected four numbers x0,x1,y0,y1, got `{s}`"));
    };
    Region::new(x0, x1, y0, y1).map_err(|e| e.to_string())
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| format!("expected n or nx,ny, got `{s}`"))?;
    match v[..] {
        [n] => Ok((n, n)),
        [nx, ny] => Ok((nx, ny)),
        _ => Err(format!("expected n or nx,ny, got `{s}`")),
    }
}

fn parse_deltas(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad delta `{t}`"))
        })
        .collect()
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["delta", "field_csv"])))]
struct AnalyzeArgs {
    #[arg(long)]
    delta: Option<f64>,
    /// Tabulated field with header x,y,alpha,beta.
    #[arg(long, value_name = "PATH")]
    field_csv: Option<PathBuf>,
    /// Add eps to alpha (non-rigid fixture).
    #[arg(long, requires = "delta")]
    eps: Option<f64>,
    /// x0,x1,y0,y1 [default: K = -0.5,1,-1,1, or the table bounds]
    #[arg(long, value_parser = parse_region, allow_hyphen_values = true)]
    region: Option<Region>,
    /// n or nx,ny [default: 2001, aligned to the axes; or the table lattice]
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    #[arg(long)]
    rigidity_tol: Option<f64>,
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Table1Args {
    /// n or nx,ny [default: 2001, aligned to the axes]
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    delta: f64,
    /// Initial data descriptor, see below.
    #[arg(long, allow_hyphen_values = true)]
    f0: String,
    #[arg(long, value_parser = parse_region, allow_hyphen_values = true)]
    region: Option<Region>,
    /// n or nx,ny [default: 257]
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Output directory for w.csv, uv.csv and header.json.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("coeffs").required(true).args(["delta", "field_csv"])))]
#[command(group(ArgGroup::new("solution").required(true).args(["uv_csv", "w_csv"])))]
struct VerifyArgs {
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_name = "PATH")]
    field_csv: Option<PathBuf>,
    /// Real pair with header x,y,u,v.
    #[arg(long, value_name = "PATH")]
    uv_csv: Option<PathBuf>,
    /// Complex field with header x,y,re,im.
    #[arg(long, value_name = "PATH")]
    w_csv: Option<PathBuf>,
    /// Difference step in x; a whole multiple of the grid spacing [default: one spacing]
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_VERIFY_THRESHOLD)]
    threshold: f64,
    /// Pass only below the threshold; ignore the convergence check.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct BeltramiArgs {
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = DEFAULT_N)]
    n: usize,
    /// Box half-width: the torus is [-L, L)^2.
    #[arg(long = "L", default_value_t = DEFAULT_HALF_WIDTH)]
    half_width: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: f64,
    #[arg(long, default_value_t = DEFAULT_DIVERGENCE_FACTOR)]
    divergence_factor: f64,
    /// Print the run descriptor as JSON instead of the trace CSV.
    #[arg(long)]
    json: bool,
    /// Also write trace.csv and beltrami.json into this directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// JSON config: {deltas, region, grid, f0, repetitions, include_beltrami}
    #[arg(long, value_name = "PATH",
          conflicts_with_all = ["deltas", "region", "grid", "f0", "repetitions", "no_beltrami", "parallel"])]
    config: Option<PathBuf>,
    /// Comma-separated [default: 1,1e-2,1e-4]
    #[arg(long, value_parser = parse_deltas)]
    deltas: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_region, allow_hyphen_values = true)]
    region: Option<Region>,
    /// n or nx,ny [default: 512]
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    #[arg(long)]
    f0: Option<String>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    no_beltrami: bool,
    /// Run delta rows concurrently.
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    json: bool,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let result = match cli.cmd {
        Command::Analyze(a) => analyze(a, out),
        Command::Table1(a) => table1(a, out),
        Command::Solve(a) => solve(a, out),
        Command::Verify(a) => verify(a, out),
        Command::Beltrami(a) => beltrami(a, out, err),
        Command::Bench(a) => bench(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::NotElliptic { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn grid_or(spec: Option<(usize, usize)>, default: usize) -> Result<GridSpec> {
    let (nx, ny) = spec.unwrap_or((default, default));
    GridSpec::new(nx, ny)
}

fn analyze(a: AnalyzeArgs, out: &mut dyn Write) -> Result<i32> {
    let (field, region, grid): (Box<dyn CoefficientField>, Region, GridSpec) = match a.delta {
        Some(delta) => {
            let fam = DeltaFamily::new(delta)?;
            let field: Box<dyn CoefficientField> = match a.eps {
                Some(eps) => Box::new(PerturbedDeltaFamily::new(fam, eps)?),
                None => Box::new(fam),
            };
            let region = a.region.unwrap_or_else(Region::compact_window);
            let (nx, ny) = a.grid.unwrap_or((DEFAULT_SCAN_NODES, DEFAULT_SCAN_NODES));
            (field, region, GridSpec::aligned(&region, nx, ny)?)
        }
        None => {
            let path = a.field_csv.as_ref().expect("clap enforces one source");
            let table = GridTableField::from_csv_path(path)?;
            let region = a.region.unwrap_or_else(|| table.lattice().bounds());
            let grid = match a.grid {
                Some((nx, ny)) => GridSpec::new(nx, ny)?,
                None => GridSpec::new(table.lattice().xs().len(), table.lattice().ys().len())?,
            };
            (Box::new(table), region, grid)
        }
    };
    let tol = a
        .rigidity_tol
        .unwrap_or_else(|| default_rigidity_tol(field.partials_kind()));
    let report = scan_region(field.as_ref(), &region, &grid, tol)?;
    let text = if a.csv {
        analyze_csv(&report)
    } else {
        serde_json::to_string_pretty(&report)? + "\n"
    };
    emit(out, a.out.as_deref(), &text)?;
    Ok(0)
}

fn analyze_csv(r: &RegionScanReport) -> String {
    format!(
        "{ANALYZE_CSV_HEADER}\n{},{},{},{},{},{},{}\n",
        r.delta.map_or_else(|| "NA".to_string(), sig6),
        sig6(r.inf_mu),
        sig6(r.sup_mu),
        sig6(r.kappa),
        sig6(r.max_abs_a),
        sig6(r.max_abs_b),
        r.rigid
    )
}

fn table1(a: Table1Args, out: &mut dyn Write) -> Result<i32> {
    let (nx, ny) = a.grid.unwrap_or((DEFAULT_SCAN_NODES, DEFAULT_SCAN_NODES));
    let grid = GridSpec::aligned(&Region::compact_window(), nx, ny)?;
    let rows = degeneration_table(&grid)?;
    let mut buf = Vec::new();
    write_table_csv(&rows, &mut buf)?;
    emit(out, a.out.as_deref(), &String::from_utf8_lossy(&buf))?;
    Ok(0)
}

#[derive(Serialize)]
struct SolveHeader {
    #[serde(flatten)]
    field: FieldHeader,
    analytic_system_residual: f64,
    analytic_transport_residual: f64,
}

fn solve(a: SolveArgs, out: &mut dyn Write) -> Result<i32> {
    let fam = DeltaFamily::new(a.delta)?;
    let f0: InitialData = a.f0.parse()?;
    let region = a.region.unwrap_or_else(Region::compact_window);
    let grid = grid_or(a.grid, DEFAULT_SOLVE_NODES)?;
    let w = solve_characteristic(&fam, &f0, &region, &grid);
    let uv = to_real_pair(&fam, &w);
    let sys = system_residual(&fam, &uv, DerivativeMode::Analytic)?;
    let tr = transport_residual_analytic(&fam, &w)?;

    std::fs::create_dir_all(&a.out)?;
    w.write_csv(std::fs::File::create(a.out.join("w.csv"))?)?;
    uv.write_csv(std::fs::File::create(a.out.join("uv.csv"))?)?;
    let header = SolveHeader {
        field: FieldHeader {
            region,
            grid,
            delta: a.delta,
            f0: f0.to_string(),
            domain_of_validity: DOMAIN_NOTE.to_string(),
            files: vec!["w.csv".into(), "uv.csv".into()],
        },
        analytic_system_residual: sys.max_residual(),
        analytic_transport_residual: tr.max_norm(),
    };
    std::fs::write(
        a.out.join("header.json"),
        serde_json::to_string_pretty(&header)? + "\n",
    )?;
    writeln!(
        out,
        "wrote {} nodes ({} x {}) to {}",
        grid.len(),
        grid.nx(),
        grid.ny(),
        a.out.display()
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct VerifyReport {
    equation: &'static str,
    mode: DerivativeMode,
    step: (f64, f64),
    max_abs_r1: f64,
    max_abs_r2: Option<f64>,
    max_residual: f64,
    /// Same interior, doubled stride.
    coarse_max_residual: Option<f64>,
    observed_order: Option<f64>,
    threshold: f64,
    pass: bool,
    reason: String,
}

/// Largest entry of `g` at least `rim` nodes inside the full grid.
fn max_within(g: &InteriorGrid<f64>, rim: usize) -> f64 {
    let skip = rim.saturating_sub(g.rim);
    let mut m = 0.0f64;
    for j in skip..g.ny.saturating_sub(skip) {
        for i in skip..g.nx.saturating_sub(skip) {
            m = m.max(g.values[j * g.nx + i].abs());
        }
    }
    m
}

fn norms(g: &InteriorGrid<Complex64>) -> InteriorGrid<f64> {
    InteriorGrid {
        nx: g.nx,
        ny: g.ny,
        rim: g.rim,
        values: g.values.iter().map(|z| z.norm()).collect(),
    }
}

fn stride_for(h: Option<f64>, region: &Region, grid: &GridSpec) -> Result<usize> {
    let Some(h) = h else { return Ok(1) };
    let (hx, _) = grid.spacing(region);
    let k = (h / hx).round();
    if !(h > 0.0) || k < 1.0 || ((h / hx) - k).abs() > 1e-6 * k {
        return Err(Error::InvalidParameter(format!(
            "--h {h} is not a whole multiple of the grid spacing {hx}"
        )));
    }
    Ok(k as usize)
}

fn verify(a: VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let field: Box<dyn CoefficientField> = match (a.delta, &a.field_csv) {
        (Some(d), _) => Box::new(DeltaFamily::new(d)?),
        (None, Some(p)) => Box::new(GridTableField::from_csv_path(p)?),
        (None, None) => unreachable!("clap enforces one coefficient source"),
    };
    // (fine residuals, coarse residuals if the grid allows, equation, step)
    let (fine, coarse, r2, equation, step, stride) = if let Some(p) = &a.uv_csv {
        let uv = RealPairField::read_csv(std::fs::File::open(p)?)?;
        let s = stride_for(a.h, &uv.region, &uv.grid)?;
        let f = system_residual(
            field.as_ref(),
            &uv,
            DerivativeMode::FiniteDifference { stride: s },
        )?;
        let c = system_residual(
            field.as_ref(),
            &uv,
            DerivativeMode::FiniteDifference { stride: 2 * s },
        )
        .ok();
        let combine = |r: &crate::transport::ResidualReport| InteriorGrid {
            nx: r.r1.nx,
            ny: r.r1.ny,
            rim: r.rim,
            values: r
                .r1
                .values
                .iter()
                .zip(&r.r2.values)
                .map(|(x, y)| x.abs().max(y.abs()))
                .collect(),
        };
        let step = f.step.expect("fd mode has a step");
        (
            combine(&f),
            c.as_ref().map(combine),
            Some((f.max_abs_r1, f.max_abs_r2)),
            "system",
            step,
            s,
        )
    } else {
        let w = ComplexField::read_csv(std::fs::File::open(a.w_csv.as_ref().unwrap())?)?;
        let s = stride_for(a.h, &w.region, &w.grid)?;
        let f = norms(&transport_residual(field.as_ref(), &w, s)?);
        let c = transport_residual(field.as_ref(), &w, 2 * s)
            .ok()
            .map(|g| norms(&g));
        let (hx, hy) = w.grid.spacing(&w.region);
        (f, c, None, "transport", (s as f64 * hx, s as f64 * hy), s)
    };
    let max_fine = max_within(&fine, fine.rim);
    let (coarse_max, order) = match &coarse {
        Some(c) => {
            let fine_common = max_within(&fine, c.rim);
            let cm = max_within(c, c.rim);
            let order = (fine_common > 0.0 && cm > 0.0).then(|| (cm / fine_common).log2());
            (Some(cm), order)
        }
        None => (None, None),
    };
    let (pass, reason) = if max_fine < a.threshold {
        (
            true,
            format!("max residual below threshold {}", a.threshold),
        )
    } else if !a.strict && order.is_some_and(|p| p >= MIN_CONVERGENCE_ORDER) {
        (
            true,
            format!(
                "residual is discretisation error: shrinks at order {:.3} under refinement",
                order.unwrap()
            ),
        )
    } else {
        (
            false,
            format!(
                "max residual {} exceeds threshold {}",
                sig6(max_fine),
                sig6(a.threshold)
            ),
        )
    };
    let report = VerifyReport {
        equation,
        mode: DerivativeMode::FiniteDifference { stride },
        step,
        max_abs_r1: r2.map_or(max_fine, |r| r.0),
        max_abs_r2: r2.map(|r| r.1),
        max_residual: max_fine,
        coarse_max_residual: coarse_max,
        observed_order: order,
        threshold: a.threshold,
        pass,
        reason,
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(if pass { 0 } else { 2 })
}

fn beltrami(a: BeltramiArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let grid = TorusGrid::new(a.n, a.half_width)?;
    let fam = DeltaFamily::new(a.delta)?;
    let mut problem = BeltramiProblem::delta_family(&fam, grid, a.margin)?;
    problem.tol = a.tol;
    problem.max_iter = a.max_iter;
    problem.divergence_factor = a.divergence_factor;
    let sol = solve_beltrami_neumann(&problem)?;
    let desc = BeltramiDescriptor::new(&problem, &sol.trace);
    let mut csv = Vec::new();
    sol.trace.write_csv(&mut csv)?;
    let json = serde_json::to_string_pretty(&desc)? + "\n";
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("trace.csv"), &csv)?;
        std::fs::write(dir.join("beltrami.json"), &json)?;
    }
    if a.json {
        out.write_all(json.as_bytes())?;
    } else {
        out.write_all(&csv)?;
    }
    let contraction = contraction_estimate(desc.sup_mu, 2.0)?;
    writeln!(
        err,
        "verdict: {} (sup|mu| = {}, L2 contraction = {}{})",
        sol.trace.verdict,
        sig6(desc.sup_mu),
        sig6(contraction),
        if near_divergent(contraction) {
            ", near-divergent"
        } else {
            ""
        }
    )?;
    Ok(0)
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = match &a.config {
        Some(p) => BenchConfig::from_json(&std::fs::read_to_string(p)?)?,
        None => {
            let mut cfg = BenchConfig::default();
            if let Some(d) = a.deltas {
                cfg.deltas = d;
            }
            if let Some(r) = a.region {
                cfg.region = r;
            }
            if let Some((nx, ny)) = a.grid {
                cfg.grid = GridSpec::new(nx, ny)?;
            }
            if let Some(f) = &a.f0 {
                cfg.f0 = f.parse()?;
            }
            if let Some(r) = a.repetitions {
                cfg.repetitions = r;
            }
            cfg.include_beltrami = !a.no_beltrami;
            cfg.parallel = a.parallel;
            cfg.validate()?;
            cfg
        }
    };
    let report = run_benchmark(&cfg)?;
    let format = if a.json {
        ReportFormat::Json
    } else {
        ReportFormat::Csv
    };
    emit(out, a.out.as_deref(), &emit_report(&report, format)?)?;
    Ok(0)
}
