//! Exact solution of rigid systems by characteristics.
//!
//! For the δ-family the spectral parameter `λ = (y + iδ)/(1+x)` solves
//! `λ_x + λ λ_y = 0`, so `ζ = y - xλ = (y - iδx)/(1+x)` is conserved along
//! characteristics and `w = f₀(ζ)` solves `w_x + λ w_y = 0` with
//! `w(0, y) = f₀(y)`. The map `(u, v) ↦ w = u + vλ` carries solutions of the
//! real system to solutions of the transport equation and back.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    delta_coefficients, grid_points, CoefficientField, DeltaFamily, GridSpec, Point, Region,
};
use crate::lattice::Lattice;

/// Entire initial data on `Γ = {x = 0}`.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    /// `c₀ + c₁ z + … + cₙ zⁿ`.
    Polynomial(Vec<Complex64>),
    /// `exp(c z + d)`.
    ExpAffine { c: Complex64, d: Complex64 },
    /// `(z + iδ)^k`, i.e. `λ^k` after composition with `ζ`.
    LambdaPower(u32),
}

impl InitialData {
    pub fn eval(&self, z: Complex64, fam: &DeltaFamily) -> Complex64 {
        match self {
            InitialData::Polynomial(c) => c
                .iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, &ck| acc * z + ck),
            InitialData::ExpAffine { c, d } => (c * z + d).exp(),
            InitialData::LambdaPower(k) => cpow(z + Complex64::new(0.0, fam.delta()), *k),
        }
    }

    pub fn derivative(&self, z: Complex64, fam: &DeltaFamily) -> Complex64 {
        match self {
            InitialData::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, (k, &ck)| {
                    acc * z + ck * k as f64
                }),
            InitialData::ExpAffine { c, d } => c * (c * z + d).exp(),
            InitialData::LambdaPower(0) => Complex64::new(0.0, 0.0),
            InitialData::LambdaPower(k) => {
                cpow(z + Complex64::new(0.0, fam.delta()), k - 1) * (*k as f64)
            }
        }
    }
}

fn cpow(z: Complex64, k: u32) -> Complex64 {
    (0..k).fold(Complex64::new(1.0, 0.0), |acc, _| acc * z)
}

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i` (exponents allowed).
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad complex literal `{s}` (expected a+bi)"));
    if s.is_empty() {
        return Err(bad());
    }
    let num = |t: &str| -> Result<f64> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse::<f64>().map_err(|_| bad()),
        }
    };
    let c = match s.strip_suffix(['i', 'j']) {
        None => Complex64::new(s.parse::<f64>().map_err(|_| bad())?, 0.0),
        Some(body) => {
            let bytes = body.as_bytes();
            let split = (1..bytes.len())
                .rev()
                .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
            match split {
                Some(k) => Complex64::new(
                    body[..k].parse::<f64>().map_err(|_| bad())?,
                    num(&body[k..])?,
                ),
                None => Complex64::new(0.0, num(body)?),
            }
        }
    };
    if c.re.is_finite() && c.im.is_finite() {
        Ok(c)
    } else {
        Err(bad())
    }
}

pub fn format_complex(c: Complex64) -> String {
    if c.im.is_sign_negative() {
        format!("{}-{}i", c.re, -c.im)
    } else {
        format!("{}+{}i", c.re, c.im)
    }
}

pub const INITIAL_DATA_GRAMMAR: &str = "\
initial data descriptors:
  poly:c0,c1,...   polynomial c0 + c1 z + ... (complex literals a+bi)
  exp:c,d          exp(c z + d)
  lpow:k           (z + i delta)^k, k a non-negative integer
complex literals: 3, -2.5, 2i, -i, 1+2i, 1e-3-4.5e2i";

impl FromStr for InitialData {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s.split_once(':').ok_or_else(|| {
            Error::Parse(format!("bad initial data `{s}`\n{INITIAL_DATA_GRAMMAR}"))
        })?;
        let fail = |why: String| Error::Parse(format!("{why}\n{INITIAL_DATA_GRAMMAR}"));
        match kind.trim() {
            "poly" => {
                let coeffs = args
                    .split(',')
                    .map(parse_complex)
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| fail(e.to_string()))?;
                Ok(InitialData::Polynomial(coeffs))
            }
            "exp" => {
                let parts: Vec<&str> = args.split(',').collect();
                if parts.len() != 2 {
                    return Err(fail(format!("exp takes two coefficients, got `{args}`")));
                }
                let c = parse_complex(parts[0]).map_err(|e| fail(e.to_string()))?;
                let d = parse_complex(parts[1]).map_err(|e| fail(e.to_string()))?;
                Ok(InitialData::ExpAffine { c, d })
            }
            "lpow" => args
                .trim()
                .parse::<u32>()
                .map(InitialData::LambdaPower)
                .map_err(|_| fail(format!("lpow takes a non-negative integer, got `{args}`"))),
            other => Err(fail(format!("unknown initial data kind `{other}`"))),
        }
    }
}

impl fmt::Display for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialData::Polynomial(c) => {
                let parts: Vec<String> = c.iter().map(|&z| format_complex(z)).collect();
                write!(f, "poly:{}", parts.join(","))
            }
            InitialData::ExpAffine { c, d } => {
                write!(f, "exp:{},{}", format_complex(*c), format_complex(*d))
            }
            InitialData::LambdaPower(k) => write!(f, "lpow:{k}"),
        }
    }
}

/// `ζ = (y - iδx)/(1+x)`.
#[inline]
pub fn characteristic_coordinate(fam: &DeltaFamily, p: Point) -> Complex64 {
    let t = 1.0 + p.x();
    Complex64::new(p.y() / t, -fam.delta() * p.x() / t)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexPartials {
    pub wx: Vec<Complex64>,
    pub wy: Vec<Complex64>,
}

/// Grid samples of a complex function `w = p + iq`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    pub region: Region,
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
    /// Closed-form `(w_x, w_y)` when the field came from a catalog solution.
    pub partials: Option<ComplexPartials>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealPartials {
    pub u_x: Vec<f64>,
    pub u_y: Vec<f64>,
    pub v_x: Vec<f64>,
    pub v_y: Vec<f64>,
}

/// Grid samples of a real pair `(u, v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealPairField {
    pub region: Region,
    pub grid: GridSpec,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub partials: Option<RealPartials>,
}

fn check_len(grid: &GridSpec, len: usize) -> Result<()> {
    if len != grid.len() {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            found: len,
        });
    }
    Ok(())
}

fn non_finite() -> Error {
    Error::InvalidParameter("field values must be finite".into())
}

impl ComplexField {
    pub fn new(region: Region, grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        if !values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(non_finite());
        }
        Ok(Self {
            region,
            grid,
            values,
            partials: None,
        })
    }

    /// Samples a closure at every node.
    pub fn from_fn(region: Region, grid: GridSpec, f: impl Fn(Point) -> Complex64) -> Result<Self> {
        let values = grid_points(&region, &grid).into_iter().map(f).collect();
        Self::new(region, grid, values)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_lattice_csv(
            writer,
            ["x", "y", "re", "im"],
            &self.region,
            &self.grid,
            |k| (self.values[k].re, self.values[k].im),
        )
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let (region, grid, vals) = read_lattice_csv(reader, ["x", "y", "re", "im"])?;
        Self::new(
            region,
            grid,
            vals.into_iter()
                .map(|(re, im)| Complex64::new(re, im))
                .collect(),
        )
    }
}

impl RealPairField {
    pub fn new(region: Region, grid: GridSpec, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        check_len(&grid, u.len())?;
        check_len(&grid, v.len())?;
        if !u.iter().chain(&v).all(|x| x.is_finite()) {
            return Err(non_finite());
        }
        Ok(Self {
            region,
            grid,
            u,
            v,
            partials: None,
        })
    }

    pub fn from_fn(
        region: Region,
        grid: GridSpec,
        f: impl Fn(Point) -> (f64, f64),
    ) -> Result<Self> {
        let (u, v) = grid_points(&region, &grid).into_iter().map(f).unzip();
        Self::new(region, grid, u, v)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_lattice_csv(
            writer,
            ["x", "y", "u", "v"],
            &self.region,
            &self.grid,
            |k| (self.u[k], self.v[k]),
        )
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let (region, grid, vals) = read_lattice_csv(reader, ["x", "y", "u", "v"])?;
        let (u, v) = vals.into_iter().unzip();
        Self::new(region, grid, u, v)
    }
}

fn write_lattice_csv<W: Write>(
    writer: W,
    header: [&str; 4],
    region: &Region,
    grid: &GridSpec,
    value: impl Fn(usize) -> (f64, f64),
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for (k, p) in grid_points(region, grid).into_iter().enumerate() {
        let (a, b) = value(k);
        w.write_record([
            p.x().to_string(),
            p.y().to_string(),
            a.to_string(),
            b.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

type LatticeData = (Region, GridSpec, Vec<(f64, f64)>);

fn read_lattice_csv<R: Read>(reader: R, header: [&str; 4]) -> Result<LatticeData> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let got: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if got != header {
        return Err(Error::Parse(format!(
            "expected header `{}`, got `{}`",
            header.join(","),
            got.join(",")
        )));
    }
    let mut coords = Vec::new();
    let mut vals = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Error::Parse(format!("row {}: bad value in column {}", line + 2, k + 1))
                })
        };
        coords.push((num(0)?, num(1)?));
        vals.push((num(2)?, num(3)?));
    }
    let (lattice, order) = Lattice::infer(&coords)?;
    let (region, grid) = lattice.as_uniform()?;
    let mut sorted = vec![(0.0, 0.0); vals.len()];
    for (row, &k) in order.iter().enumerate() {
        sorted[k] = vals[row];
    }
    Ok((region, grid, sorted))
}

/// How a field solution was evaluated over its rectangle.
pub const DOMAIN_NOTE: &str =
    "full rectangle: initial data is entire, so w = f0(zeta) is evaluated at every node";

/// JSON sidecar describing a written field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub region: Region,
    pub grid: GridSpec,
    pub delta: f64,
    pub f0: String,
    pub domain_of_validity: String,
    pub files: Vec<String>,
}

/// `w = f₀(ζ)` at every node, with closed-form `(w_x, w_y)`.
///
/// The work per node is one evaluation of `ζ` and of `f₀`, `f₀'`; nothing
/// depends on the size of δ.
pub fn solve_characteristic(
    fam: &DeltaFamily,
    f0: &InitialData,
    region: &Region,
    grid: &GridSpec,
) -> ComplexField {
    let n = grid.len();
    let mut values = Vec::with_capacity(n);
    let mut wx = Vec::with_capacity(n);
    let mut wy = Vec::with_capacity(n);
    for p in grid_points(region, grid) {
        let t = 1.0 + p.x();
        let zeta = characteristic_coordinate(fam, p);
        let d = f0.derivative(zeta, fam);
        values.push(f0.eval(zeta, fam));
        // ζ_x = -λ/(1+x), ζ_y = 1/(1+x)
        wx.push(-d * fam.lambda(p) / t);
        wy.push(d / t);
    }
    ComplexField {
        region: *region,
        grid: *grid,
        values,
        partials: Some(ComplexPartials { wx, wy }),
    }
}

/// `w = (u + a v) + i b v` with `a = y/(1+x)`, `b = δ/(1+x)`.
pub fn from_real_pair(fam: &DeltaFamily, uv: &RealPairField) -> ComplexField {
    let delta = fam.delta();
    let points = grid_points(&uv.region, &uv.grid);
    let values = points
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let t = 1.0 + p.x();
            Complex64::new(uv.u[k] + p.y() / t * uv.v[k], delta / t * uv.v[k])
        })
        .collect();
    let partials = uv.partials.as_ref().map(|d| {
        let mut wx = Vec::with_capacity(points.len());
        let mut wy = Vec::with_capacity(points.len());
        for (k, p) in points.iter().enumerate() {
            let t = 1.0 + p.x();
            let (a, b) = (p.y() / t, delta / t);
            let (a_x, a_y, b_x) = (-a / t, 1.0 / t, -b / t);
            let v = uv.v[k];
            wx.push(Complex64::new(
                d.u_x[k] + a_x * v + a * d.v_x[k],
                b_x * v + b * d.v_x[k],
            ));
            wy.push(Complex64::new(
                d.u_y[k] + a_y * v + a * d.v_y[k],
                b * d.v_y[k],
            ));
        }
        ComplexPartials { wx, wy }
    });
    ComplexField {
        region: uv.region,
        grid: uv.grid,
        values,
        partials,
    }
}

/// Inverse identification: `u = p - (a/b) q`, `v = q/b`.
///
/// For the δ-family `a/b = y/δ` and `1/b = (1+x)/δ`; `b_y = 0`.
pub fn to_real_pair(fam: &DeltaFamily, w: &ComplexField) -> RealPairField {
    let delta = fam.delta();
    let points = grid_points(&w.region, &w.grid);
    let (u, v) = points
        .iter()
        .zip(&w.values)
        .map(|(p, z)| {
            let t = 1.0 + p.x();
            (z.re - p.y() / delta * z.im, t / delta * z.im)
        })
        .unzip();
    let partials = w.partials.as_ref().map(|d| {
        let n = points.len();
        let mut r = RealPartials {
            u_x: Vec::with_capacity(n),
            u_y: Vec::with_capacity(n),
            v_x: Vec::with_capacity(n),
            v_y: Vec::with_capacity(n),
        };
        for (k, p) in points.iter().enumerate() {
            let (t, y) = (1.0 + p.x(), p.y());
            let q = w.values[k].im;
            let (wx, wy) = (d.wx[k], d.wy[k]);
            r.u_x.push(wx.re - y / delta * wx.im);
            r.u_y.push(wy.re - (q + y * wy.im) / delta);
            r.v_x.push((q + t * wx.im) / delta);
            r.v_y.push(t / delta * wy.im);
        }
        r
    });
    RealPairField {
        region: w.region,
        grid: w.grid,
        u,
        v,
        partials,
    }
}

/// The pair `(u, v) = (-alpha, -beta)` with closed-form partials; the real
/// image of `w = λ²`.
pub fn square_lambda_pair(fam: &DeltaFamily, region: &Region, grid: &GridSpec) -> RealPairField {
    let n = grid.len();
    let mut out = RealPairField {
        region: *region,
        grid: *grid,
        u: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        partials: Some(RealPartials {
            u_x: Vec::with_capacity(n),
            u_y: Vec::with_capacity(n),
            v_x: Vec::with_capacity(n),
            v_y: Vec::with_capacity(n),
        }),
    };
    let d = out.partials.as_mut().unwrap();
    for p in grid_points(region, grid) {
        let cs = delta_coefficients(fam, p);
        out.u.push(-cs.alpha);
        out.v.push(-cs.beta);
        d.u_x.push(-cs.alpha_x);
        d.u_y.push(-cs.alpha_y);
        d.v_x.push(-cs.beta_x);
        d.v_y.push(-cs.beta_y);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    /// Closed-form partials carried by the field.
    Analytic,
    /// Central differences over `stride` grid spacings.
    FiniteDifference { stride: usize },
}

impl DerivativeMode {
    pub fn fd() -> Self {
        DerivativeMode::FiniteDifference { stride: 1 }
    }

    fn rim(&self) -> usize {
        match self {
            DerivativeMode::Analytic => 0,
            DerivativeMode::FiniteDifference { stride } => *stride,
        }
    }
}

/// Residuals on the nodes that are at least `rim` nodes away from the
/// boundary, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct InteriorGrid<T> {
    pub nx: usize,
    pub ny: usize,
    pub rim: usize,
    pub values: Vec<T>,
}

/// Residuals of `u_x - alpha v_y` and `v_x + u_y - beta v_y`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub max_abs_r1: f64,
    pub max_abs_r2: f64,
    pub mode: DerivativeMode,
    /// Difference step `(hx, hy)` for finite-difference mode.
    pub step: Option<(f64, f64)>,
    /// Boundary nodes excluded on each side.
    pub rim: usize,
    #[serde(skip)]
    pub r1: InteriorGrid<f64>,
    #[serde(skip)]
    pub r2: InteriorGrid<f64>,
}

impl ResidualReport {
    pub fn max_residual(&self) -> f64 {
        self.max_abs_r1.max(self.max_abs_r2)
    }
}

struct Stencil {
    nx: usize,
    ny: usize,
    k: usize,
    hx2: f64,
    hy2: f64,
}

impl Stencil {
    fn new(region: &Region, grid: &GridSpec, stride: usize) -> Result<Self> {
        let (hx, hy) = grid.spacing(region);
        if stride == 0 || grid.nx() <= 2 * stride || grid.ny() <= 2 * stride {
            return Err(Error::StencilOutOfDomain {
                x: region.x_min(),
                y: region.y_min(),
                h: stride as f64 * hx.max(hy),
            });
        }
        Ok(Self {
            nx: grid.nx(),
            ny: grid.ny(),
            k: stride,
            hx2: 2.0 * stride as f64 * hx,
            hy2: 2.0 * stride as f64 * hy,
        })
    }

    fn interior(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (self.k..self.ny - self.k)
            .flat_map(move |j| (self.k..self.nx - self.k).map(move |i| (i, j, j * self.nx + i)))
    }

    fn dx<T>(&self, f: &[T], idx: usize) -> T
    where
        T: Copy + std::ops::Sub<Output = T> + std::ops::Div<f64, Output = T>,
    {
        (f[idx + self.k] - f[idx - self.k]) / self.hx2
    }

    fn dy<T>(&self, f: &[T], idx: usize) -> T
    where
        T: Copy + std::ops::Sub<Output = T> + std::ops::Div<f64, Output = T>,
    {
        (f[idx + self.k * self.nx] - f[idx - self.k * self.nx]) / self.hy2
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Residuals of the real system for `uv` under the coefficients of `field`.
pub fn system_residual<F: CoefficientField + ?Sized>(
    field: &F,
    uv: &RealPairField,
    mode: DerivativeMode,
) -> Result<ResidualReport> {
    let points = grid_points(&uv.region, &uv.grid);
    let (nx, ny) = (uv.grid.nx(), uv.grid.ny());
    let rim = mode.rim();
    let (r1, r2, step) = match mode {
        DerivativeMode::Analytic => {
            let d = uv.partials.as_ref().ok_or(Error::MissingAnalyticPartials)?;
            let mut r1 = Vec::with_capacity(points.len());
            let mut r2 = Vec::with_capacity(points.len());
            for (k, &p) in points.iter().enumerate() {
                let (alpha, beta) = field.coefficients(p)?;
                r1.push(d.u_x[k] - alpha * d.v_y[k]);
                r2.push(d.v_x[k] + d.u_y[k] - beta * d.v_y[k]);
            }
            (r1, r2, None)
        }
        DerivativeMode::FiniteDifference { stride } => {
            let st = Stencil::new(&uv.region, &uv.grid, stride)?;
            let mut r1 = Vec::new();
            let mut r2 = Vec::new();
            for (_, _, idx) in st.interior() {
                let (alpha, beta) = field.coefficients(points[idx])?;
                let v_y = st.dy(&uv.v, idx);
                r1.push(st.dx(&uv.u, idx) - alpha * v_y);
                r2.push(st.dx(&uv.v, idx) + st.dy(&uv.u, idx) - beta * v_y);
            }
            let (hx, hy) = uv.grid.spacing(&uv.region);
            (r1, r2, Some((stride as f64 * hx, stride as f64 * hy)))
        }
    };
    let (inx, iny) = (nx - 2 * rim, ny - 2 * rim);
    Ok(ResidualReport {
        max_abs_r1: max_abs(&r1),
        max_abs_r2: max_abs(&r2),
        mode,
        step,
        rim,
        r1: InteriorGrid {
            nx: inx,
            ny: iny,
            rim,
            values: r1,
        },
        r2: InteriorGrid {
            nx: inx,
            ny: iny,
            rim,
            values: r2,
        },
    })
}

/// Spectral parameter of a field, preferring its closed form.
fn field_lambda<F: CoefficientField + ?Sized>(field: &F, p: Point) -> Result<Complex64> {
    if let Some(sp) = field.spectral(p) {
        return Ok(sp.lambda());
    }
    let (alpha, beta) = field.coefficients(p)?;
    let disc = 4.0 * alpha - beta * beta;
    if !(disc > 0.0) {
        return Err(Error::NotElliptic {
            disc,
            at: Some((p.x(), p.y())),
        });
    }
    Ok(Complex64::new(-0.5 * beta, 0.5 * disc.sqrt()))
}

/// `w_x + λ w_y` on interior nodes by central differences.
pub fn transport_residual<F: CoefficientField + ?Sized>(
    field: &F,
    w: &ComplexField,
    stride: usize,
) -> Result<InteriorGrid<Complex64>> {
    let st = Stencil::new(&w.region, &w.grid, stride)?;
    let points = grid_points(&w.region, &w.grid);
    let values = st
        .interior()
        .map(|(_, _, idx)| {
            Ok(st.dx(&w.values, idx) + field_lambda(field, points[idx])? * st.dy(&w.values, idx))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InteriorGrid {
        nx: w.grid.nx() - 2 * stride,
        ny: w.grid.ny() - 2 * stride,
        rim: stride,
        values,
    })
}

/// `w_x + λ w_y` from the closed-form partials carried by `w`.
pub fn transport_residual_analytic<F: CoefficientField + ?Sized>(
    field: &F,
    w: &ComplexField,
) -> Result<InteriorGrid<Complex64>> {
    let d = w.partials.as_ref().ok_or(Error::MissingAnalyticPartials)?;
    let values = grid_points(&w.region, &w.grid)
        .into_iter()
        .enumerate()
        .map(|(k, p)| Ok(d.wx[k] + field_lambda(field, p)? * d.wy[k]))
        .collect::<Result<Vec<_>>>()?;
    Ok(InteriorGrid {
        nx: w.grid.nx(),
        ny: w.grid.ny(),
        rim: 0,
        values,
    })
}

impl InteriorGrid<Complex64> {
    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fam(d: f64) -> DeltaFamily {
        DeltaFamily::new(d).unwrap()
    }

    fn pt(x: f64, y: f64) -> Point {
        Point::new(x, y).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zeta_examples() {
        let f = fam(0.4);
        for y in [-2.0, 0.0, 0.75] {
            assert_eq!(characteristic_coordinate(&f, pt(0.0, y)), c(y, 0.0));
        }
        let z = characteristic_coordinate(&fam(1.0), pt(1.0, 0.0));
        assert_eq!(z, c(0.0, -0.5));
        for (x, y) in [(-0.7, 0.3), (2.0, -1.0), (0.1, 0.1)] {
            let p = pt(x, y);
            let d = characteristic_coordinate(&f, p) + c(0.0, 0.4) - f.lambda(p);
            assert!(d.norm() < 1e-14);
        }
    }

    #[test]
    fn zeta_real_part_constant_on_characteristic_lines() {
        let f = fam(0.2);
        for cst in [-1.5, 0.0, 0.3, 2.0] {
            for x in [-0.8, -0.2, 0.0, 0.9, 4.0] {
                let p = pt(x, cst * (1.0 + x));
                let z = characteristic_coordinate(&f, p);
                assert_relative_eq!(z.re, cst, epsilon = 1e-14);
                assert_relative_eq!(z.im, -0.2 * x / (1.0 + x), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn complex_literals() {
        let cases = [
            ("3", c(3.0, 0.0)),
            ("-2.5", c(-2.5, 0.0)),
            ("2i", c(0.0, 2.0)),
            ("i", c(0.0, 1.0)),
            ("-i", c(0.0, -1.0)),
            ("0+1i", c(0.0, 1.0)),
            ("1-2i", c(1.0, -2.0)),
            ("1e-3-4.5e2i", c(1e-3, -450.0)),
            ("-1e+2+i", c(-100.0, 1.0)),
        ];
        for (s, want) in cases {
            assert_eq!(parse_complex(s).unwrap(), want, "{s}");
        }
        for s in ["", "abc", "1+", "1+2", "i2", "nan"] {
            assert!(parse_complex(s).is_err(), "{s}");
        }
        for z in [c(1.5, -0.25), c(-3.0, 0.0), c(0.0, 1e-300)] {
            assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
        }
    }

    #[test]
    fn descriptors() {
        assert_eq!(
            "exp:1,0+1i".parse::<InitialData>().unwrap(),
            InitialData::ExpAffine {
                c: c(1.0, 0.0),
                d: c(0.0, 1.0)
            }
        );
        assert_eq!(
            "lpow:2".parse::<InitialData>().unwrap(),
            InitialData::LambdaPower(2)
        );
        assert_eq!(
            "poly:3".parse::<InitialData>().unwrap(),
            InitialData::Polynomial(vec![c(3.0, 0.0)])
        );
        for s in ["poly:1,2-i,i", "exp:2-1i,0.5+0i", "lpow:7"] {
            let d: InitialData = s.parse().unwrap();
            assert_eq!(d.to_string().parse::<InitialData>().unwrap(), d);
        }
        for s in ["lpow:-1", "lpow:x", "exp:1", "sin:1", "poly:", "nocolon"] {
            assert!(s.parse::<InitialData>().is_err(), "{s}");
        }
    }

    #[test]
    fn polynomial_derivative() {
        let f = fam(1.0);
        let p = InitialData::Polynomial(vec![c(1.0, 0.0), c(0.0, 2.0), c(3.0, 0.0)]);
        let z = c(0.5, -1.0);
        assert!((p.eval(z, &f) - (c(1.0, 0.0) + c(0.0, 2.0) * z + 3.0 * z * z)).norm() < 1e-15);
        assert!((p.derivative(z, &f) - (c(0.0, 2.0) + 6.0 * z)).norm() < 1e-15);
    }

    #[test]
    fn exp_affine_is_exp_lambda() {
        let f = fam(1.0);
        let k = Region::compact_window();
        let g = GridSpec::new(17, 13).unwrap();
        let w = solve_characteristic(&f, &"exp:1,0+1i".parse().unwrap(), &k, &g);
        for (p, z) in grid_points(&k, &g).iter().zip(&w.values) {
            assert!((z - f.lambda(*p).exp()).norm() < 1e-14 * z.norm().max(1.0));
        }
    }

    #[test]
    fn constants_solve_transport() {
        let k = Region::compact_window();
        let g = GridSpec::new(9, 9).unwrap();
        let w = solve_characteristic(
            &fam(0.3),
            &InitialData::Polynomial(vec![c(2.0, -1.0)]),
            &k,
            &g,
        );
        assert!(w.values.iter().all(|&z| z == c(2.0, -1.0)));
        assert_eq!(
            transport_residual(&fam(0.3), &w, 1).unwrap().max_norm(),
            0.0
        );
    }

    #[test]
    fn initial_trace_is_exact() {
        let f = fam(0.05);
        let r = Region::new(0.0, 1.0, -1.0, 1.0).unwrap();
        let g = GridSpec::new(5, 21).unwrap();
        for f0 in ["exp:0.5-2i,1+1i", "poly:1,2,0-1i", "lpow:4"] {
            let f0: InitialData = f0.parse().unwrap();
            let w = solve_characteristic(&f, &f0, &r, &g);
            for (p, z) in grid_points(&r, &g).iter().zip(&w.values) {
                if p.x() == 0.0 {
                    assert_eq!(*z, f0.eval(c(p.y(), 0.0), &f));
                }
            }
        }
    }

    #[test]
    fn lambda_square_maps_to_minus_alpha_beta() {
        let k = Region::compact_window();
        let g = GridSpec::new(21, 17).unwrap();
        for d in [1.0, 0.1, 1e-6] {
            let f = fam(d);
            let uv = to_real_pair(
                &f,
                &solve_characteristic(&f, &InitialData::LambdaPower(2), &k, &g),
            );
            let want = square_lambda_pair(&f, &k, &g);
            for i in 0..g.len() {
                assert!((uv.u[i] - want.u[i]).abs() < 1e-12);
                assert!((uv.v[i] - want.v[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn from_real_pair_examples() {
        // (u, v) = (-alpha, -beta) at the origin, δ = 1: w = λ² = -1
        let f = fam(1.0);
        let r = Region::new(-0.5, 0.5, -0.5, 0.5).unwrap();
        let g = GridSpec::new(3, 3).unwrap();
        let w = from_real_pair(&f, &square_lambda_pair(&f, &r, &g));
        assert!((w.values[4] - c(-1.0, 0.0)).norm() < 1e-15);
        // v ≡ 0 gives w = u
        let uv = RealPairField::from_fn(r, g, |p| (p.x() + 2.0 * p.y(), 0.0)).unwrap();
        let w = from_real_pair(&f, &uv);
        for (z, u) in w.values.iter().zip(&uv.u) {
            assert_eq!(*z, c(*u, 0.0));
        }
        // real w gives v ≡ 0, u = w
        let wr = ComplexField::from_fn(r, g, |p| c(p.y() - p.x(), 0.0)).unwrap();
        let uv = to_real_pair(&f, &wr);
        assert!(uv.v.iter().all(|&v| v == 0.0));
        assert!(uv.u.iter().zip(&wr.values).all(|(u, z)| *u == z.re));
    }

    #[test]
    fn analytic_system_residual_of_square_pair() {
        let k = Region::compact_window();
        let g = GridSpec::new(33, 33).unwrap();
        for d in [1.0, 1e-3] {
            let f = fam(d);
            let rep = system_residual(
                &f,
                &square_lambda_pair(&f, &k, &g),
                DerivativeMode::Analytic,
            )
            .unwrap();
            assert!(rep.max_residual() < 1e-12, "{}", rep.max_residual());
            assert_eq!(rep.rim, 0);
        }
    }

    #[test]
    fn constant_pair_has_zero_residual() {
        let k = Region::compact_window();
        let g = GridSpec::new(9, 7).unwrap();
        let uv = RealPairField::from_fn(k, g, |_| (3.5, 0.0)).unwrap();
        let rep = system_residual(&fam(0.2), &uv, DerivativeMode::fd()).unwrap();
        assert_eq!(rep.max_residual(), 0.0);
        assert_eq!(rep.r1.values.len(), 7 * 5);
        assert_eq!(rep.rim, 1);
        assert!(matches!(
            system_residual(&fam(0.2), &uv, DerivativeMode::Analytic),
            Err(Error::MissingAnalyticPartials)
        ));
    }

    #[test]
    fn stencil_too_wide() {
        let k = Region::compact_window();
        let g = GridSpec::new(4, 9).unwrap();
        let uv = RealPairField::from_fn(k, g, |_| (1.0, 0.0)).unwrap();
        assert!(matches!(
            system_residual(
                &fam(1.0),
                &uv,
                DerivativeMode::FiniteDifference { stride: 2 }
            ),
            Err(Error::StencilOutOfDomain { .. })
        ));
    }

    #[test]
    fn non_solution_has_transport_residual() {
        // w = conj(λ): w_x + λ w_y = conj(λ_x) + λ conj(λ_y) with λ_x = -λ/t,
        // λ_y = 1/t, i.e. (λ - conj(λ))/t = 2iδ/t² at every point.
        let f = fam(0.5);
        let r = Region::new(-0.2, 0.2, -0.2, 0.2).unwrap();
        let g = GridSpec::new(41, 41).unwrap();
        let w = ComplexField::from_fn(r, g, |p| f.lambda(p).conj()).unwrap();
        let res = transport_residual(&f, &w, 1).unwrap();
        // centre node (0, 0): 2i · 0.5 = i
        let centre = res.values[(res.ny / 2) * res.nx + res.nx / 2];
        assert!((centre - c(0.0, 1.0)).norm() < 1e-3);
    }

    #[test]
    fn exp_lambda_analytic_transport_residual() {
        let f = fam(1.0);
        let k = Region::compact_window();
        let g = GridSpec::new(31, 31).unwrap();
        let w = solve_characteristic(&f, &"exp:1,0+1i".parse().unwrap(), &k, &g);
        assert!(transport_residual_analytic(&f, &w).unwrap().max_norm() < 1e-12);
    }

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let f = fam(0.3);
        let r = Region::new(-0.3, 0.7, -1.0, 1.0).unwrap();
        let g = GridSpec::new(7, 5).unwrap();
        let w = solve_characteristic(&f, &"exp:1.3-0.2i,0.1+0.3i".parse().unwrap(), &r, &g);
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        let back = ComplexField::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.region, w.region);
        assert_eq!(back.grid, w.grid);
        for (a, b) in back.values.iter().zip(&w.values) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        let uv = to_real_pair(&f, &w);
        let mut buf = Vec::new();
        uv.write_csv(&mut buf).unwrap();
        let back = RealPairField::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.u, uv.u);
        assert_eq!(back.v, uv.v);
        assert!(RealPairField::read_csv("x,y,re,im\n".as_bytes()).is_err());
        assert!(RealPairField::read_csv("x,y,u,v\n0,0,1,nan\n".as_bytes()).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pair(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
            (
                prop::collection::vec(-10.0f64..10.0, n),
                prop::collection::vec(-10.0f64..10.0, n),
            )
        }

        proptest! {
            #[test]
            fn identification_roundtrips(
                d in prop::sample::select(vec![1.0, 1e-4, 1e-10]),
                (u, v) in pair(7 * 5),
            ) {
                let f = fam(d);
                let r = Region::compact_window();
                let g = GridSpec::new(7, 5).unwrap();
                let uv = RealPairField::new(r, g, u, v).unwrap();
                let w = from_real_pair(&f, &uv);
                let back = to_real_pair(&f, &w);
                for k in 0..g.len() {
                    prop_assert!((back.u[k] - uv.u[k]).abs() < 1e-12);
                    prop_assert!((back.v[k] - uv.v[k]).abs() < 1e-12);
                }
                let again = from_real_pair(&f, &back);
                for k in 0..g.len() {
                    prop_assert!((again.values[k] - w.values[k]).norm() < 1e-12);
                }
            }

            #[test]
            fn initial_trace_matches_f0(
                d in 1e-6f64..2.0,
                c in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..5),
            ) {
                let f = fam(d);
                let f0 = InitialData::Polynomial(c.iter().map(|&(a, b)| Complex64::new(a, b)).collect());
                let r = Region::new(0.0, 0.5, -1.0, 1.0).unwrap();
                let g = GridSpec::new(3, 9).unwrap();
                let w = solve_characteristic(&f, &f0, &r, &g);
                for (p, z) in grid_points(&r, &g).iter().zip(&w.values) {
                    if p.x() == 0.0 {
                        prop_assert_eq!(*z, f0.eval(Complex64::new(p.y(), 0.0), &f));
                    }
                }
            }
        }
    }
}
