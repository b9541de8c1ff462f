//! Pointwise structure analysis and region scans.
//!
//! For a coefficient pair `(alpha, beta)` the discriminant is
//! `Δ = 4 alpha - beta²`, the spectral parameter is the upper-half-plane root
//! `λ = (-beta + i√Δ)/2` of `X² + beta X + alpha`, and the Beltrami
//! coefficient is `μ = (λ - i)/(λ + i)`. The transport obstruction is
//! reported through its coefficients `(A, B)` in the basis `{1, 𝔦}`; it
//! vanishes exactly when `λ_x + λ λ_y = 0`.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    default_step, grid_points, CoefficientField, CoefficientSample, DeltaFamily, GridSpec,
    PartialsKind, Point, Region, SpectralSample,
};
use crate::numfmt::sig6;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Rigidity tolerance for fields with closed-form partials.
pub const RIGIDITY_TOL_CLOSED_FORM: f64 = 1e-10;
/// Rigidity tolerance for finite-difference partials.
pub const RIGIDITY_TOL_FINITE_DIFFERENCE: f64 = 1e-4;

pub fn default_rigidity_tol(kind: PartialsKind) -> f64 {
    match kind {
        PartialsKind::ClosedForm => RIGIDITY_TOL_CLOSED_FORM,
        PartialsKind::FiniteDifference => RIGIDITY_TOL_FINITE_DIFFERENCE,
    }
}

/// `δ` values of the degeneration table.
pub const TABLE1_DELTAS: [f64; 5] = [1.0, 1e-1, 1e-2, 1e-3, 1e-4];

/// Default scan resolution per axis before alignment.
pub const DEFAULT_SCAN_NODES: usize = 2001;

pub const TABLE1_HEADER: &str = "delta,inf_mu,sup_mu,kappa";

fn check_disc(disc: f64) -> Result<f64> {
    if disc > 0.0 {
        Ok(disc)
    } else {
        Err(Error::NotElliptic { disc, at: None })
    }
}

/// `Δ = 4 alpha - beta²`; fails unless strictly positive.
pub fn discriminant(cs: &CoefficientSample) -> Result<f64> {
    check_disc(4.0 * cs.alpha - cs.beta * cs.beta)
}

fn lambda_from(alpha: f64, beta: f64) -> Result<Complex64> {
    let disc = check_disc(4.0 * alpha - beta * beta)?;
    Ok(Complex64::new(-0.5 * beta, 0.5 * disc.sqrt()))
}

/// Upper-half-plane root `λ = (-beta + i√Δ)/2`.
pub fn spectral_parameter(cs: &CoefficientSample) -> Result<Complex64> {
    lambda_from(cs.alpha, cs.beta)
}

/// `μ = (λ - i)/(λ + i)`, defined for `Im λ > 0`.
pub fn beltrami_coefficient(lambda: Complex64) -> Result<Complex64> {
    if !(lambda.im > 0.0) {
        return Err(Error::InvalidBranch {
            re: lambda.re,
            im: lambda.im,
        });
    }
    Ok((lambda - I) / (lambda + I))
}

/// `κ = ((1 + s)/(1 - s))²` for `s = sup |μ| ∈ [0, 1)`.
pub fn condition_number(sup_mu: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&sup_mu) {
        return Err(Error::DegenerateStructure { sup_mu });
    }
    let r = (1.0 + sup_mu) / (1.0 - sup_mu);
    Ok(r * r)
}

/// Obstruction coefficients `(A, B)` from `alpha`, `beta` and their partials:
///
/// ```text
/// A = [beta (alpha_x - alpha beta_y) - 2 alpha (beta_x + alpha_y - beta beta_y)] / Δ
/// B = [2 (alpha_x - alpha beta_y) - beta (beta_x + alpha_y - beta beta_y)] / Δ
/// ```
///
/// Both numerators cancel for rigid fields, so the absolute rounding error
/// grows like `1/Δ`; see [`spectral_obstruction`] for the stable form.
pub fn obstruction(cs: &CoefficientSample) -> Result<(f64, f64)> {
    let disc = discriminant(cs)?;
    let n1 = cs.alpha_x - cs.alpha * cs.beta_y;
    let n2 = cs.beta_x + cs.alpha_y - cs.beta * cs.beta_y;
    let a = (cs.beta * n1 - 2.0 * cs.alpha * n2) / disc;
    let b = (2.0 * n1 - cs.beta * n2) / disc;
    Ok((a, b))
}

/// `(A, B)` from the spectral factorisation `λ = a + ib`, using
/// `A + B λ = λ_x + λ λ_y`:
///
/// ```text
/// B = a_y + (b_x + a b_y)/b
/// A = a_x - b b_y - a (b_x + a b_y)/b
/// ```
pub fn spectral_obstruction(sp: &SpectralSample) -> Result<(f64, f64)> {
    if !(sp.b > 0.0) {
        return Err(Error::InvalidBranch { re: sp.a, im: sp.b });
    }
    let q = (sp.b_x + sp.a * sp.b_y) / sp.b;
    Ok((sp.a_x - sp.b * sp.b_y - sp.a * q, sp.a_y + q))
}

/// Obstruction at a point, through the spectral form when the field has one.
pub fn field_obstruction<F: CoefficientField + ?Sized>(field: &F, p: Point) -> Result<(f64, f64)> {
    let r = match field.spectral(p) {
        Some(sp) => spectral_obstruction(&sp),
        None => obstruction(&field.sample(p)?),
    };
    r.map_err(|e| e.located(p.x(), p.y()))
}

fn lambda_at<F: CoefficientField + ?Sized>(field: &F, p: Point) -> Result<Complex64> {
    let (alpha, beta) = field.coefficients(p)?;
    lambda_from(alpha, beta).map_err(|e| e.located(p.x(), p.y()))
}

/// `λ_x + λ λ_y`, from closed-form partials when the field has them and by
/// central differences of `λ` otherwise.
pub fn burgers_residual<F: CoefficientField + ?Sized>(field: &F, p: Point) -> Result<Complex64> {
    match field.partials_kind() {
        PartialsKind::ClosedForm => {
            if let Some(sp) = field.spectral(p) {
                return Ok(sp.lambda_x() + sp.lambda() * sp.lambda_y());
            }
            let cs = field.sample(p)?;
            let lambda = spectral_parameter(&cs).map_err(|e| e.located(p.x(), p.y()))?;
            let root = 2.0 * lambda.im; // √Δ
            let d = |alpha_d: f64, beta_d: f64| {
                let disc_d = 4.0 * alpha_d - 2.0 * cs.beta * beta_d;
                Complex64::new(-0.5 * beta_d, 0.25 * disc_d / root)
            };
            Ok(d(cs.alpha_x, cs.beta_x) + lambda * d(cs.alpha_y, cs.beta_y))
        }
        PartialsKind::FiniteDifference => burgers_residual_fd(field, p, default_step(p)),
    }
}

/// `λ_x + λ λ_y` with central differences of step `h`, whatever the field.
pub fn burgers_residual_fd<F: CoefficientField + ?Sized>(
    field: &F,
    p: Point,
    h: f64,
) -> Result<Complex64> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step h must be > 0, got {h}"
        )));
    }
    let at = |dx: f64, dy: f64| -> Result<Complex64> {
        let out = Error::StencilOutOfDomain {
            x: p.x(),
            y: p.y(),
            h,
        };
        let q = p.offset(dx, dy).map_err(|_| out)?;
        if !field.contains(q) {
            return Err(Error::StencilOutOfDomain {
                x: p.x(),
                y: p.y(),
                h,
            });
        }
        lambda_at(field, q)
    };
    let lx = (at(h, 0.0)? - at(-h, 0.0)?) / (2.0 * h);
    let ly = (at(0.0, h)? - at(0.0, -h)?) / (2.0 * h);
    Ok(lx + lambda_at(field, p)? * ly)
}

/// Pointwise structure of a field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureSample {
    pub disc: f64,
    pub lambda: Complex64,
    pub mu: Complex64,
    pub abs_mu: f64,
    pub obstr_a: f64,
    pub obstr_b: f64,
}

pub fn structure_at<F: CoefficientField + ?Sized>(field: &F, p: Point) -> Result<StructureSample> {
    let loc = |e: Error| e.located(p.x(), p.y());
    let (disc, lambda, (obstr_a, obstr_b)) = match field.spectral(p) {
        Some(sp) => {
            let disc = check_disc(4.0 * sp.b * sp.b).map_err(loc)?;
            (disc, sp.lambda(), spectral_obstruction(&sp).map_err(loc)?)
        }
        None => {
            let cs = field.sample(p)?;
            let disc = discriminant(&cs).map_err(loc)?;
            (
                disc,
                spectral_parameter(&cs).map_err(loc)?,
                obstruction(&cs).map_err(loc)?,
            )
        }
    };
    let mu = beltrami_coefficient(lambda)?;
    Ok(StructureSample {
        disc,
        lambda,
        mu,
        abs_mu: mu.norm(),
        obstr_a,
        obstr_b,
    })
}

/// Summary of a grid scan over a rectangle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionScanReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub region: Region,
    pub grid: GridSpec,
    pub inf_mu: f64,
    pub sup_mu: f64,
    pub kappa: f64,
    #[serde(rename = "max_abs_A")]
    pub max_abs_a: f64,
    #[serde(rename = "max_abs_B")]
    pub max_abs_b: f64,
    pub rigid: bool,
    pub rigidity_tol: f64,
}

impl RegionScanReport {
    /// One row under [`TABLE1_HEADER`], six significant digits.
    pub fn table_row(&self) -> String {
        let delta = self.delta.map_or_else(|| "NA".to_string(), sig6);
        format!(
            "{},{},{},{}",
            delta,
            sig6(self.inf_mu),
            sig6(self.sup_mu),
            sig6(self.kappa)
        )
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{TABLE1_HEADER}")?;
        writeln!(w, "{}", self.table_row())?;
        Ok(())
    }
}

pub fn write_table_csv<W: Write>(reports: &[RegionScanReport], mut w: W) -> Result<()> {
    writeln!(w, "{TABLE1_HEADER}")?;
    for r in reports {
        writeln!(w, "{}", r.table_row())?;
    }
    Ok(())
}

#[derive(Clone, Copy)]
struct Extremes {
    inf_mu: f64,
    sup_mu: f64,
    max_a: f64,
    max_b: f64,
}

impl Extremes {
    const EMPTY: Self = Self {
        inf_mu: f64::INFINITY,
        sup_mu: f64::NEG_INFINITY,
        max_a: 0.0,
        max_b: 0.0,
    };

    fn push(&mut self, s: &StructureSample) {
        self.inf_mu = self.inf_mu.min(s.abs_mu);
        self.sup_mu = self.sup_mu.max(s.abs_mu);
        self.max_a = self.max_a.max(s.obstr_a.abs());
        self.max_b = self.max_b.max(s.obstr_b.abs());
    }

    fn merge(self, o: Self) -> Self {
        Self {
            inf_mu: self.inf_mu.min(o.inf_mu),
            sup_mu: self.sup_mu.max(o.sup_mu),
            max_a: self.max_a.max(o.max_a),
            max_b: self.max_b.max(o.max_b),
        }
    }
}

/// Inf/sup of `|μ|`, `κ` from the sup, and the largest obstruction
/// coefficients over the grid nodes. The scan stops at the first non-elliptic
/// node in row-major order.
pub fn scan_region<F: CoefficientField + ?Sized>(
    field: &F,
    region: &Region,
    grid: &GridSpec,
    rigidity_tol: f64,
) -> Result<RegionScanReport> {
    if let Some(dom) = field.domain() {
        if !dom.contains_region(region) {
            return Err(Error::InvalidRegion(format!(
                "scan region {region:?} is not inside the field domain {dom:?}"
            )));
        }
    }
    let points = grid_points(region, grid);
    let rows: Vec<Result<Extremes>> = points
        .par_chunks(grid.nx())
        .map(|row| {
            let mut ext = Extremes::EMPTY;
            for &p in row {
                ext.push(&structure_at(field, p)?);
            }
            Ok(ext)
        })
        .collect();
    let mut ext = Extremes::EMPTY;
    for r in rows {
        ext = ext.merge(r?);
    }
    let kappa = condition_number(ext.sup_mu)?;
    Ok(RegionScanReport {
        delta: field.delta(),
        region: *region,
        grid: *grid,
        inf_mu: ext.inf_mu,
        sup_mu: ext.sup_mu,
        kappa,
        max_abs_a: ext.max_a,
        max_abs_b: ext.max_b,
        rigid: ext.max_a.max(ext.max_b) < rigidity_tol,
        rigidity_tol,
    })
}

/// The degeneration table: one scan of `K` per entry of [`TABLE1_DELTAS`].
pub fn degeneration_table(grid: &GridSpec) -> Result<Vec<RegionScanReport>> {
    let k = Region::compact_window();
    TABLE1_DELTAS
        .iter()
        .map(|&d| scan_region(&DeltaFamily::new(d)?, &k, grid, RIGIDITY_TOL_CLOSED_FORM))
        .collect()
}
