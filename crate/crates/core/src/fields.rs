//! Points, regions, grids and coefficient fields.
//!
//! A coefficient field supplies the pair `(alpha, beta)` of the real system
//!
//! ```text
//! u_x - alpha v_y = 0
//! v_x + u_y - beta v_y = 0
//! ```
//!
//! together with the four first partials. The built-in δ-family and the test
//! fixtures carry closed-form partials; user fields (callables or CSV tables)
//! fall back to central differences.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// Points closer than this to the line `x = -1` are rejected.
pub const GUARD_MARGIN: f64 = 1e-12;

/// A point of the half-plane `x > -1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    x: f64,
    y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) || x < -1.0 + GUARD_MARGIN {
            return Err(Error::DomainViolation { x, y });
        }
        Ok(Self { x, y })
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }

    /// Shifted copy; fails if the shift leaves the half-plane.
    pub fn offset(&self, dx: f64, dy: f64) -> Result<Self> {
        Self::new(self.x + dx, self.y + dy)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// The one-parameter family with `alpha = (y² + δ²)/(1+x)²`, `beta = -2y/(1+x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeltaFamily {
    delta: f64,
}

impl DeltaFamily {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must be finite and > 0, got {delta}"
            )));
        }
        Ok(Self { delta })
    }

    #[inline]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Spectral parameter `λ = (y + iδ)/(1+x)` in closed form.
    #[inline]
    pub fn lambda(&self, p: Point) -> Complex64 {
        let t = 1.0 + p.x;
        Complex64::new(p.y / t, self.delta / t)
    }

    pub fn spectral(&self, p: Point) -> SpectralSample {
        let t = 1.0 + p.x;
        let t2 = t * t;
        SpectralSample {
            a: p.y / t,
            b: self.delta / t,
            a_x: -p.y / t2,
            a_y: 1.0 / t,
            b_x: -self.delta / t2,
            b_y: 0.0,
        }
    }
}

/// Coefficients and their first partials at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSample {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub beta_x: f64,
    pub beta_y: f64,
}

/// Closed-form factorisation `alpha = a² + b²`, `beta = -2a` (so `λ = a + ib`)
/// with first partials.
///
/// Fields that know this factorisation let the obstruction be evaluated
/// without dividing a cancelling numerator by the discriminant, which keeps
/// full accuracy as `b → 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralSample {
    pub a: f64,
    pub b: f64,
    pub a_x: f64,
    pub a_y: f64,
    pub b_x: f64,
    pub b_y: f64,
}

impl SpectralSample {
    #[inline]
    pub fn lambda(&self) -> Complex64 {
        Complex64::new(self.a, self.b)
    }

    #[inline]
    pub fn lambda_x(&self) -> Complex64 {
        Complex64::new(self.a_x, self.b_x)
    }

    #[inline]
    pub fn lambda_y(&self) -> Complex64 {
        Complex64::new(self.a_y, self.b_y)
    }
}

/// The δ-family coefficients with closed-form partials.
pub fn delta_coefficients(fam: &DeltaFamily, p: Point) -> CoefficientSample {
    let t = 1.0 + p.x;
    let t2 = t * t;
    let s = p.y * p.y + fam.delta * fam.delta;
    CoefficientSample {
        alpha: s / t2,
        beta: -2.0 * p.y / t,
        alpha_x: -2.0 * s / (t2 * t),
        alpha_y: 2.0 * p.y / t2,
        beta_x: 2.0 * p.y / t2,
        beta_y: -2.0 / t,
    }
}

/// Axis-aligned rectangle inside the half-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RegionRepr")]
pub struct Region {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

#[derive(Deserialize)]
struct RegionRepr {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl TryFrom<RegionRepr> for Region {
    type Error = Error;

    fn try_from(r: RegionRepr) -> Result<Self> {
        Region::new(r.x_min, r.x_max, r.y_min, r.y_max)
    }
}

impl Region {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidRegion("bounds must be finite".into()));
        }
        if x_min < -1.0 + GUARD_MARGIN {
            return Err(Error::InvalidRegion(format!(
                "x_min = {x_min} must exceed -1"
            )));
        }
        if x_min >= x_max || y_min >= y_max {
            return Err(Error::InvalidRegion(format!(
                "empty rectangle [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    /// `K = [-1/2, 1] × [-1, 1]`, the window of the degeneration table.
    pub fn compact_window() -> Self {
        Self {
            x_min: -0.5,
            x_max: 1.0,
            y_min: -1.0,
            y_max: 1.0,
        }
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn contains_region(&self, other: &Region) -> bool {
        other.x_min >= self.x_min
            && other.x_max <= self.x_max
            && other.y_min >= self.y_min
            && other.y_max <= self.y_max
    }
}

/// Node counts of a uniform lattice over a region, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr")]
pub struct GridSpec {
    nx: usize,
    ny: usize,
}

#[derive(Deserialize)]
struct GridRepr {
    nx: usize,
    ny: usize,
}

impl TryFrom<GridRepr> for GridSpec {
    type Error = Error;

    fn try_from(g: GridRepr) -> Result<Self> {
        GridSpec::new(g.nx, g.ny)
    }
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 nodes per axis, got {nx} x {ny}"
            )));
        }
        Ok(Self { nx, ny })
    }

    /// Smallest counts `>= (nx, ny)` for which every axis range containing 0
    /// has a node exactly at 0. Axes that cannot be aligned within a search
    /// window keep the requested count.
    pub fn aligned(region: &Region, nx: usize, ny: usize) -> Result<Self> {
        let g = Self::new(nx, ny)?;
        Ok(Self {
            nx: aligned_count(region.x_min, region.x_max, g.nx),
            ny: aligned_count(region.y_min, region.y_max, g.ny),
        })
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node spacing `(hx, hy)`.
    pub fn spacing(&self, region: &Region) -> (f64, f64) {
        (
            (region.x_max - region.x_min) / (self.nx - 1) as f64,
            (region.y_max - region.y_min) / (self.ny - 1) as f64,
        )
    }

    pub fn x_coords(&self, region: &Region) -> Vec<f64> {
        axis_coords(region.x_min, region.x_max, self.nx)
    }

    pub fn y_coords(&self, region: &Region) -> Vec<f64> {
        axis_coords(region.y_min, region.y_max, self.ny)
    }

    /// Row-major linear index: x varies fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Grid whose node spacing is halved (`n -> 2n - 1` per axis).
    pub fn refined(&self) -> Self {
        Self {
            nx: 2 * self.nx - 1,
            ny: 2 * self.ny - 1,
        }
    }
}

fn zero_index(lo: f64, hi: f64, n: usize) -> Option<usize> {
    if !(lo <= 0.0 && hi >= 0.0) {
        return None;
    }
    let pos = -lo / (hi - lo) * (n - 1) as f64;
    let k = pos.round();
    ((pos - k).abs() < 1e-9 * (n as f64)).then_some(k as usize)
}

fn aligned_count(lo: f64, hi: f64, n: usize) -> usize {
    if !(lo < 0.0 && hi > 0.0) {
        return n;
    }
    (n..n + 4096)
        .find(|&m| zero_index(lo, hi, m).is_some())
        .unwrap_or(n)
}

fn axis_coords(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let span = hi - lo;
    let last = (n - 1) as f64;
    let mut c: Vec<f64> = (0..n).map(|i| lo + span * i as f64 / last).collect();
    c[n - 1] = hi;
    if let Some(k) = zero_index(lo, hi, n) {
        c[k] = 0.0;
    }
    c
}

/// All nodes of the lattice, row-major (x fastest), corners included.
pub fn grid_points(region: &Region, grid: &GridSpec) -> Vec<Point> {
    let xs = grid.x_coords(region);
    let ys = grid.y_coords(region);
    let mut pts = Vec::with_capacity(grid.len());
    for &y in &ys {
        for &x in &xs {
            // region invariant keeps x > -1
            pts.push(Point { x, y });
        }
    }
    pts
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartialsKind {
    ClosedForm,
    FiniteDifference,
}

/// A coefficient field `(alpha, beta)` over a subset of the half-plane.
pub trait CoefficientField: Send + Sync {
    /// Declared domain; `None` means the whole half-plane.
    fn domain(&self) -> Option<Region>;

    fn coefficients(&self, p: Point) -> Result<(f64, f64)>;

    fn partials_kind(&self) -> PartialsKind;

    /// Coefficients and partials. Fields without closed forms use
    /// [`numeric_partials`] with [`default_step`].
    fn sample(&self, p: Point) -> Result<CoefficientSample> {
        numeric_partials(self, p, default_step(p))
    }

    /// Closed-form spectral factorisation, when known.
    fn spectral(&self, _p: Point) -> Option<SpectralSample> {
        None
    }

    /// δ of the underlying family, for report metadata.
    fn delta(&self) -> Option<f64> {
        None
    }

    fn contains(&self, p: Point) -> bool {
        self.domain().is_none_or(|r| r.contains(p))
    }
}

/// Default central-difference step `1e-5 · max(1, |x| + |y|)`.
pub fn default_step(p: Point) -> f64 {
    1e-5 * (p.x.abs() + p.y.abs()).max(1.0)
}

/// Central differences for all four partials; `alpha`, `beta` sampled exactly.
pub fn numeric_partials<F: CoefficientField + ?Sized>(
    field: &F,
    p: Point,
    h: f64,
) -> Result<CoefficientSample> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step h must be > 0, got {h}"
        )));
    }
    let out = || Error::StencilOutOfDomain { x: p.x, y: p.y, h };
    let shifted = |dx: f64, dy: f64| -> Result<(f64, f64)> {
        let q = p.offset(dx, dy).map_err(|_| out())?;
        if !field.contains(q) {
            return Err(out());
        }
        field.coefficients(q)
    };
    if !field.contains(p) {
        return Err(out());
    }
    let (alpha, beta) = field.coefficients(p)?;
    let (ae, be) = shifted(h, 0.0)?;
    let (aw, bw) = shifted(-h, 0.0)?;
    let (an, bn) = shifted(0.0, h)?;
    let (as_, bs) = shifted(0.0, -h)?;
    let inv = 0.5 / h;
    Ok(CoefficientSample {
        alpha,
        beta,
        alpha_x: (ae - aw) * inv,
        alpha_y: (an - as_) * inv,
        beta_x: (be - bw) * inv,
        beta_y: (bn - bs) * inv,
    })
}

impl CoefficientField for DeltaFamily {
    fn domain(&self) -> Option<Region> {
        None
    }

    fn coefficients(&self, p: Point) -> Result<(f64, f64)> {
        let cs = delta_coefficients(self, p);
        Ok((cs.alpha, cs.beta))
    }

    fn partials_kind(&self) -> PartialsKind {
        PartialsKind::ClosedForm
    }

    fn sample(&self, p: Point) -> Result<CoefficientSample> {
        Ok(delta_coefficients(self, p))
    }

    fn spectral(&self, p: Point) -> Option<SpectralSample> {
        Some(DeltaFamily::spectral(self, p))
    }

    fn delta(&self) -> Option<f64> {
        Some(self.delta)
    }
}

/// Non-rigid fixture: `alpha + eps` with `beta` unchanged.
///
/// The discriminant becomes `4δ²/(1+x)² + 4 eps`, so the field stays uniformly
/// elliptic while the obstruction no longer vanishes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbedDeltaFamily {
    family: DeltaFamily,
    eps: f64,
}

impl PerturbedDeltaFamily {
    pub fn new(family: DeltaFamily, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must be > 0, got {eps}"
            )));
        }
        Ok(Self { family, eps })
    }

    pub fn family(&self) -> DeltaFamily {
        self.family
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

impl CoefficientField for PerturbedDeltaFamily {
    fn domain(&self) -> Option<Region> {
        None
    }

    fn coefficients(&self, p: Point) -> Result<(f64, f64)> {
        let cs = self.sample(p)?;
        Ok((cs.alpha, cs.beta))
    }

    fn partials_kind(&self) -> PartialsKind {
        PartialsKind::ClosedForm
    }

    fn sample(&self, p: Point) -> Result<CoefficientSample> {
        let mut cs = delta_coefficients(&self.family, p);
        cs.alpha += self.eps;
        Ok(cs)
    }

    fn spectral(&self, p: Point) -> Option<SpectralSample> {
        let t = 1.0 + p.x;
        let d = self.family.delta();
        let b = (d * d / (t * t) + self.eps).sqrt();
        Some(SpectralSample {
            a: p.y / t,
            b,
            a_x: -p.y / (t * t),
            a_y: 1.0 / t,
            b_x: -d * d / (t * t * t * b),
            b_y: 0.0,
        })
    }

    fn delta(&self) -> Option<f64> {
        Some(self.family.delta())
    }
}

/// Spatially constant coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantField {
    pub alpha: f64,
    pub beta: f64,
}

impl CoefficientField for ConstantField {
    fn domain(&self) -> Option<Region> {
        None
    }

    fn coefficients(&self, _p: Point) -> Result<(f64, f64)> {
        Ok((self.alpha, self.beta))
    }

    fn partials_kind(&self) -> PartialsKind {
        PartialsKind::ClosedForm
    }

    fn sample(&self, _p: Point) -> Result<CoefficientSample> {
        Ok(CoefficientSample {
            alpha: self.alpha,
            beta: self.beta,
            alpha_x: 0.0,
            alpha_y: 0.0,
            beta_x: 0.0,
            beta_y: 0.0,
        })
    }

    fn spectral(&self, _p: Point) -> Option<SpectralSample> {
        let disc = 4.0 * self.alpha - self.beta * self.beta;
        (disc > 0.0).then(|| SpectralSample {
            a: -0.5 * self.beta,
            b: 0.5 * disc.sqrt(),
            a_x: 0.0,
            a_y: 0.0,
            b_x: 0.0,
            b_y: 0.0,
        })
    }
}

type Sampler = dyn Fn(f64, f64) -> (f64, f64) + Send + Sync;

/// User field given as a callable `(x, y) -> (alpha, beta)`; partials by
/// central differences.
pub struct FnField {
    domain: Option<Region>,
    sampler: Box<Sampler>,
}

impl FnField {
    pub fn new<F>(domain: Option<Region>, sampler: F) -> Self
    where
        F: Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    {
        Self {
            domain,
            sampler: Box::new(sampler),
        }
    }
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField")
            .field("domain", &self.domain)
            .finish()
    }
}

impl CoefficientField for FnField {
    fn domain(&self) -> Option<Region> {
        self.domain
    }

    fn coefficients(&self, p: Point) -> Result<(f64, f64)> {
        if !self.contains(p) {
            return Err(Error::DomainViolation { x: p.x, y: p.y });
        }
        Ok((self.sampler)(p.x, p.y))
    }

    fn partials_kind(&self) -> PartialsKind {
        PartialsKind::FiniteDifference
    }
}

/// Tabulated field on a rectangular lattice with bilinear interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct GridTableField {
    lattice: Lattice,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Nodal differences `[alpha_x, alpha_y, beta_x, beta_y]`.
    diffs: [Vec<f64>; 4],
}

/// Derivative of `f` along an axis with nodes `xs`, sampled at stride
/// `step` in `f`. Central inside, second-order one-sided at the ends.
fn axis_diff(f: &[f64], xs: &[f64], base: usize, step: usize, out: &mut [f64]) {
    let n = xs.len();
    let at = |i: usize| f[base + i * step];
    for i in 0..n {
        out[base + i * step] = if n == 2 {
            (at(1) - at(0)) / (xs[1] - xs[0])
        } else if i == 0 {
            (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (xs[2] - xs[0])
        } else if i == n - 1 {
            (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (xs[n - 1] - xs[n - 3])
        } else {
            (at(i + 1) - at(i - 1)) / (xs[i + 1] - xs[i - 1])
        };
    }
}

fn lattice_diffs(lattice: &Lattice, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (xs, ys) = (lattice.xs(), lattice.ys());
    let nx = xs.len();
    let mut dx = vec![0.0; f.len()];
    let mut dy = vec![0.0; f.len()];
    for j in 0..ys.len() {
        axis_diff(f, xs, j * nx, 1, &mut dx);
    }
    for i in 0..nx {
        axis_diff(f, ys, i, nx, &mut dy);
    }
    (dx, dy)
}

pub const FIELD_TABLE_HEADER: [&str; 4] = ["x", "y", "alpha", "beta"];

impl GridTableField {
    /// Samples `field` at the nodes of `region`/`grid`.
    pub fn tabulate<F: CoefficientField + ?Sized>(
        field: &F,
        region: &Region,
        grid: &GridSpec,
    ) -> Result<Self> {
        let mut alpha = Vec::with_capacity(grid.len());
        let mut beta = Vec::with_capacity(grid.len());
        for p in grid_points(region, grid) {
            let (a, b) = field.coefficients(p)?;
            alpha.push(a);
            beta.push(b);
        }
        Ok(Self::assemble(Lattice::uniform(region, grid), alpha, beta))
    }

    fn assemble(lattice: Lattice, alpha: Vec<f64>, beta: Vec<f64>) -> Self {
        let (ax, ay) = lattice_diffs(&lattice, &alpha);
        let (bx, by) = lattice_diffs(&lattice, &beta);
        Self {
            lattice,
            alpha,
            beta,
            diffs: [ax, ay, bx, by],
        }
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != FIELD_TABLE_HEADER {
            return Err(Error::Parse(format!(
                "field table header must be `x,y,alpha,beta`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut coords = Vec::new();
        let mut vals = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                let v: f64 = rec[k].parse().map_err(|_| {
                    Error::Parse(format!("row {}: bad number `{}`", line + 2, &rec[k]))
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse(format!("row {}: non-finite value", line + 2)));
                }
                Ok(v)
            };
            coords.push((parse(0)?, parse(1)?));
            vals.push((parse(2)?, parse(3)?));
        }
        let (lattice, order) = Lattice::infer(&coords)?;
        if lattice.x_min() < -1.0 + GUARD_MARGIN {
            return Err(Error::InvalidRegion("field table reaches x <= -1".into()));
        }
        let mut alpha = vec![0.0; order.len()];
        let mut beta = vec![0.0; order.len()];
        for (row, &k) in order.iter().enumerate() {
            alpha[k] = vals[row].0;
            beta[k] = vals[row].1;
        }
        Ok(Self::assemble(lattice, alpha, beta))
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(FIELD_TABLE_HEADER)?;
        let (xs, ys) = (self.lattice.xs(), self.lattice.ys());
        for (j, &y) in ys.iter().enumerate() {
            for (i, &x) in xs.iter().enumerate() {
                let k = j * xs.len() + i;
                w.write_record([
                    x.to_string(),
                    y.to_string(),
                    self.alpha[k].to_string(),
                    self.beta[k].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }
}

impl GridTableField {
    fn interpolator(&self, p: Point) -> Result<impl Fn(&[f64]) -> f64> {
        let (k00, k10, k01, k11, s, t) = self
            .lattice
            .locate(p.x, p.y)
            .ok_or(Error::DomainViolation { x: p.x, y: p.y })?;
        Ok(move |v: &[f64]| {
            (1.0 - s) * (1.0 - t) * v[k00]
                + s * (1.0 - t) * v[k10]
                + (1.0 - s) * t * v[k01]
                + s * t * v[k11]
        })
    }
}

impl CoefficientField for GridTableField {
    fn domain(&self) -> Option<Region> {
        Some(self.lattice.bounds())
    }

    fn coefficients(&self, p: Point) -> Result<(f64, f64)> {
        let bil = self.interpolator(p)?;
        Ok((bil(&self.alpha), bil(&self.beta)))
    }

    /// Lattice differences interpolated to `p`; valid up to the edges.
    fn sample(&self, p: Point) -> Result<CoefficientSample> {
        let bil = self.interpolator(p)?;
        let [ax, ay, bx, by] = &self.diffs;
        Ok(CoefficientSample {
            alpha: bil(&self.alpha),
            beta: bil(&self.beta),
            alpha_x: bil(ax),
            alpha_y: bil(ay),
            beta_x: bil(bx),
            beta_y: bil(by),
        })
    }

    fn partials_kind(&self) -> PartialsKind {
        PartialsKind::FiniteDifference
    }
}
