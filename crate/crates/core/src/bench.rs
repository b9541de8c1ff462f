//! δ-sweep comparing the characteristic solver with the Beltrami baseline.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{scan_region, RIGIDITY_TOL_CLOSED_FORM};
use crate::beltrami::{
    solve_beltrami_neumann, BeltramiProblem, TorusGrid, Verdict, DEFAULT_HALF_WIDTH,
    DEFAULT_MARGIN, DEFAULT_MAX_ITER, DEFAULT_N, DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::fields::{DeltaFamily, GridSpec, Region};
use crate::numfmt::sig6;
use crate::transport::{
    solve_characteristic, system_residual, to_real_pair, DerivativeMode, InitialData,
};

pub const BENCH_HEADER: &str =
    "delta,kappa,char_time_s,char_residual,beltrami_iters,beltrami_verdict";
pub const DEFAULT_BENCH_DELTAS: [f64; 3] = [1.0, 1e-2, 1e-4];
pub const DEFAULT_BENCH_NODES: usize = 512;
pub const DEFAULT_REPETITIONS: usize = 5;
pub const MIN_REPETITIONS: usize = 3;

/// Baseline settings used when a sweep includes the Beltrami column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeltramiSettings {
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub margin: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BeltramiSettings {
    fn default() -> Self {
        Self {
            n: DEFAULT_N,
            l: DEFAULT_HALF_WIDTH,
            margin: DEFAULT_MARGIN,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigRepr", into = "ConfigRepr")]
pub struct BenchConfig {
    pub deltas: Vec<f64>,
    pub region: Region,
    pub grid: GridSpec,
    pub f0: InitialData,
    pub repetitions: usize,
    pub include_beltrami: bool,
    /// Run δ rows concurrently. Timings within a row stay sequential.
    pub parallel: bool,
    pub beltrami: BeltramiSettings,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            deltas: DEFAULT_BENCH_DELTAS.to_vec(),
            region: Region::compact_window(),
            grid: GridSpec::new(DEFAULT_BENCH_NODES, DEFAULT_BENCH_NODES).expect("valid grid"),
            f0: InitialData::LambdaPower(3),
            repetitions: DEFAULT_REPETITIONS,
            include_beltrami: true,
            parallel: false,
            beltrami: BeltramiSettings::default(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() {
            return Err(Error::InvalidParameter(
                "bench needs at least one delta".into(),
            ));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "delta must be > 0, got {d}"
            )));
        }
        if self.repetitions < MIN_REPETITIONS {
            return Err(Error::InvalidParameter(format!(
                "repetitions must be >= {MIN_REPETITIONS}, got {}",
                self.repetitions
            )));
        }
        if self.include_beltrami {
            TorusGrid::new(self.beltrami.n, self.beltrami.l)?;
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Serialize, Deserialize)]
struct ConfigRepr {
    deltas: Vec<f64>,
    #[serde(default = "default_region")]
    region: [f64; 4],
    #[serde(default = "default_grid")]
    grid: [usize; 2],
    #[serde(default = "default_f0")]
    f0: String,
    #[serde(default = "default_repetitions")]
    repetitions: usize,
    #[serde(default = "default_true")]
    include_beltrami: bool,
    #[serde(default)]
    parallel: bool,
    #[serde(default)]
    beltrami: BeltramiSettings,
}

fn default_region() -> [f64; 4] {
    let k = Region::compact_window();
    [k.x_min(), k.x_max(), k.y_min(), k.y_max()]
}

fn default_grid() -> [usize; 2] {
    [DEFAULT_BENCH_NODES; 2]
}

fn default_f0() -> String {
    InitialData::LambdaPower(3).to_string()
}

fn default_true() -> bool {
    true
}

fn default_repetitions() -> usize {
    DEFAULT_REPETITIONS
}

impl TryFrom<ConfigRepr> for BenchConfig {
    type Error = Error;

    fn try_from(r: ConfigRepr) -> Result<Self> {
        let [x0, x1, y0, y1] = r.region;
        let cfg = Self {
            deltas: r.deltas,
            region: Region::new(x0, x1, y0, y1)?,
            grid: GridSpec::new(r.grid[0], r.grid[1])?,
            f0: r.f0.parse()?,
            repetitions: r.repetitions,
            include_beltrami: r.include_beltrami,
            parallel: r.parallel,
            beltrami: r.beltrami,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<BenchConfig> for ConfigRepr {
    fn from(c: BenchConfig) -> Self {
        Self {
            deltas: c.deltas,
            region: [
                c.region.x_min(),
                c.region.x_max(),
                c.region.y_min(),
                c.region.y_max(),
            ],
            grid: [c.grid.nx(), c.grid.ny()],
            f0: c.f0.to_string(),
            repetitions: c.repetitions,
            include_beltrami: c.include_beltrami,
            parallel: c.parallel,
            beltrami: c.beltrami,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub delta: f64,
    pub kappa: Option<f64>,
    /// Median wall time of the characteristic solve, seconds.
    pub char_time_s: Option<f64>,
    /// Max finite-difference residual of the real pair.
    pub char_residual: Option<f64>,
    pub beltrami_iters: Option<usize>,
    pub beltrami_verdict: Option<Verdict>,
    /// Failures in this row; the sweep continues past them.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median wall time of `solve_characteristic` after one discarded warm-up.
pub fn time_characteristic(
    fam: &DeltaFamily,
    f0: &InitialData,
    region: &Region,
    grid: &GridSpec,
    repetitions: usize,
) -> f64 {
    std::hint::black_box(solve_characteristic(fam, f0, region, grid));
    let times = (0..repetitions)
        .map(|_| {
            let start = Instant::now();
            std::hint::black_box(solve_characteristic(fam, f0, region, grid));
            start.elapsed().as_secs_f64()
        })
        .collect();
    median(times)
}

fn run_row(cfg: &BenchConfig, delta: f64) -> BenchRow {
    let mut row = BenchRow {
        delta,
        kappa: None,
        char_time_s: None,
        char_residual: None,
        beltrami_iters: None,
        beltrami_verdict: None,
        errors: Vec::new(),
    };
    let fam = match DeltaFamily::new(delta) {
        Ok(f) => f,
        Err(e) => {
            row.errors.push(e.to_string());
            return row;
        }
    };
    row.char_time_s = Some(time_characteristic(
        &fam,
        &cfg.f0,
        &cfg.region,
        &cfg.grid,
        cfg.repetitions,
    ));
    let w = solve_characteristic(&fam, &cfg.f0, &cfg.region, &cfg.grid);
    match system_residual(&fam, &to_real_pair(&fam, &w), DerivativeMode::fd()) {
        Ok(r) => row.char_residual = Some(r.max_residual()),
        Err(e) => row.errors.push(format!("residual: {e}")),
    }
    match scan_region(&fam, &cfg.region, &cfg.grid, RIGIDITY_TOL_CLOSED_FORM) {
        Ok(s) => row.kappa = Some(s.kappa),
        Err(e) => row.errors.push(format!("scan: {e}")),
    }
    if cfg.include_beltrami {
        let b = cfg.beltrami;
        let run = TorusGrid::new(b.n, b.l)
            .and_then(|g| BeltramiProblem::delta_family(&fam, g, b.margin))
            .and_then(|mut p| {
                p.tol = b.tol;
                p.max_iter = b.max_iter;
                solve_beltrami_neumann(&p)
            });
        match run {
            Ok(sol) => {
                row.beltrami_iters = Some(sol.trace.iterations());
                row.beltrami_verdict = Some(sol.trace.verdict);
            }
            Err(e) => row.errors.push(format!("beltrami: {e}")),
        }
    }
    row
}

pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let rows = if cfg.parallel {
        cfg.deltas.par_iter().map(|&d| run_row(cfg, d)).collect()
    } else {
        cfg.deltas.iter().map(|&d| run_row(cfg, d)).collect()
    };
    Ok(BenchReport {
        config: cfg.clone(),
        rows,
    })
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map_or_else(|| "NA".to_string(), f)
}

pub fn emit_report(report: &BenchReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        ReportFormat::Csv => {
            let mut out = String::from(BENCH_HEADER);
            out.push('\n');
            for r in &report.rows {
                let cells = [
                    sig6(r.delta),
                    opt(r.kappa, sig6),
                    opt(r.char_time_s, sig6),
                    opt(r.char_residual, sig6),
                    opt(r.beltrami_iters, |k| k.to_string()),
                    opt(r.beltrami_verdict, |v| v.name().to_string()),
                ];
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            Ok(out)
        }
    }
}
