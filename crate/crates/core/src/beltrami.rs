//! Periodic Beurling transform and the Neumann iteration for
//! `w_z̄ = μ w_z`.
//!
//! Conventions: `∂̄ = (∂x + i∂y)/2`, `∂ = (∂x - i∂y)/2`. On the torus
//! `[-L, L)²` a mode `e^{i(ξ₁x + ξ₂y)}` has `∂̄ ↦ iξ_c/2` and `∂ ↦ i conj(ξ_c)/2`
//! with `ξ_c = ξ₁ + iξ₂`, so `S = ∂ ∂̄⁻¹` is the multiplier `conj(ξ_c)/ξ_c`
//! and the Cauchy transform `C = ∂̄⁻¹` is `-2i/ξ_c`. Both kill the mean.
//!
//! Writing `w = z + Cφ` turns the Beltrami equation into
//! `φ = μ(1 + Sφ)`, iterated from `φ₀ = 0`.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{DeltaFamily, Point, Region};
use crate::numfmt::sig6;

pub const DEFAULT_N: usize = 128;
pub const DEFAULT_HALF_WIDTH: f64 = 4.0;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_DIVERGENCE_FACTOR: f64 = 1e3;
pub const DEFAULT_MARGIN: f64 = 0.25;
/// Contraction estimates above this are reported as near-divergent.
pub const NEAR_DIVERGENT: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    n: usize,
    #[serde(rename = "L")]
    l: f64,
}

impl TorusGrid {
    pub fn new(n: usize, l: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "torus size must be a power of two >= 16, got {n}"
            )));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "box half-width must be > 0, got {l}"
            )));
        }
        Ok(Self { n, l })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.l
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.l / self.n as f64
    }

    /// Node coordinate along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.l + self.spacing() * i as f64
    }

    /// `z = x + iy` at every node, row-major with x fastest.
    pub fn z(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.n {
            for i in 0..self.n {
                out.push(Complex64::new(self.coord(i), self.coord(j)));
            }
        }
        out
    }

    /// Angular wavenumber of FFT bin `m`.
    pub fn wavenumber(&self, m: usize) -> f64 {
        let signed = if m < self.n / 2 {
            m as f64
        } else {
            m as f64 - self.n as f64
        };
        std::f64::consts::PI * signed / self.l
    }

    fn check(&self, f: &[Complex64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                found: f.len(),
            });
        }
        Ok(())
    }
}

/// Planned 2-D transforms and the Fourier multipliers built on them.
pub struct FourierOps {
    grid: TorusGrid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl FourierOps {
    pub fn new(grid: TorusGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            fwd: planner.plan_fft_forward(grid.n),
            inv: planner.plan_fft_inverse(grid.n),
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    fn transform(&self, data: &mut [Complex64], fft: &dyn Fft<f64>) {
        let n = self.grid.n;
        fft.process(data);
        transpose(data, n);
        fft.process(data);
        transpose(data, n);
    }

    /// Applies the multiplier `symbol(ξ₁, ξ₂)`; the zero mode is set to 0.
    pub fn apply(
        &self,
        f: &[Complex64],
        symbol: impl Fn(f64, f64) -> Complex64,
    ) -> Result<Vec<Complex64>> {
        self.grid.check(f)?;
        let n = self.grid.n;
        let mut data = f.to_vec();
        self.transform(&mut data, self.fwd.as_ref());
        let ks: Vec<f64> = (0..n).map(|m| self.grid.wavenumber(m)).collect();
        let scale = 1.0 / (n * n) as f64;
        for (j, row) in data.chunks_exact_mut(n).enumerate() {
            for (i, c) in row.iter_mut().enumerate() {
                *c = if i == 0 && j == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    *c * symbol(ks[i], ks[j]) * scale
                };
            }
        }
        self.transform(&mut data, self.inv.as_ref());
        Ok(data)
    }

    pub fn beurling(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        self.apply(f, |k1, k2| {
            let xi = Complex64::new(k1, k2);
            xi.conj() / xi
        })
    }

    pub fn cauchy(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        self.apply(f, |k1, k2| {
            Complex64::new(0.0, -2.0) / Complex64::new(k1, k2)
        })
    }

    pub fn dbar(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        self.apply(f, |k1, k2| {
            Complex64::new(0.0, 0.5) * Complex64::new(k1, k2)
        })
    }

    pub fn d(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        self.apply(f, |k1, k2| {
            Complex64::new(0.0, 0.5) * Complex64::new(k1, -k2)
        })
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for j in 0..n {
        for i in j + 1..n {
            data.swap(j * n + i, i * n + j);
        }
    }
}

/// One-shot Beurling transform; plans the FFT on every call.
pub fn beurling_transform(grid: &TorusGrid, f: &[Complex64]) -> Result<Vec<Complex64>> {
    FourierOps::new(*grid).beurling(f)
}

/// One-shot Cauchy transform (inverse of `∂̄` on mean-zero grids).
pub fn cauchy_transform(grid: &TorusGrid, f: &[Complex64]) -> Result<Vec<Complex64>> {
    FourierOps::new(*grid).cauchy(f)
}

/// Quintic smoothstep cut-off in one variable: 1 on `[a, b]`, 0 beyond
/// distance `margin`, C² in between.
fn cutoff(v: f64, a: f64, b: f64, margin: f64) -> f64 {
    let d = (a - v).max(v - b).max(0.0);
    let r = d / margin;
    if r >= 1.0 {
        0.0
    } else {
        1.0 - r * r * r * (10.0 - 15.0 * r + 6.0 * r * r)
    }
}

/// The C² bump that is 1 on `region` and vanishes outside its
/// `margin`-neighbourhood.
pub fn region_bump(region: &Region, margin: f64, x: f64, y: f64) -> f64 {
    cutoff(x, region.x_min(), region.x_max(), margin)
        * cutoff(y, region.y_min(), region.y_max(), margin)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaSource {
    pub delta: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeltramiProblem {
    pub grid: TorusGrid,
    pub mu: Vec<Complex64>,
    pub tol: f64,
    pub max_iter: usize,
    pub divergence_factor: f64,
    /// Set when `mu` came from the δ-family.
    pub source: Option<DeltaSource>,
}

impl BeltramiProblem {
    pub fn new(grid: TorusGrid, mu: Vec<Complex64>) -> Result<Self> {
        grid.check(&mu)?;
        if !mu.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidParameter("mu must be finite".into()));
        }
        Ok(Self {
            grid,
            mu,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            divergence_factor: DEFAULT_DIVERGENCE_FACTOR,
            source: None,
        })
    }

    /// δ-family coefficient on K, cut off by [`region_bump`] and sampled on the
    /// torus. The margin must keep the support inside `x > -1` and the box.
    pub fn delta_family(fam: &DeltaFamily, grid: TorusGrid, margin: f64) -> Result<Self> {
        let k = Region::compact_window();
        if !(margin > 0.0)
            || k.x_min() - margin <= -1.0
            || k.x_max() + margin >= grid.l
            || k.y_max() + margin >= grid.l
            || k.y_min() - margin <= -grid.l
        {
            return Err(Error::InvalidParameter(format!(
                "truncation margin {margin} does not fit the box and the domain"
            )));
        }
        let mut mu = Vec::with_capacity(grid.len());
        for j in 0..grid.n {
            let y = grid.coord(j);
            for i in 0..grid.n {
                let x = grid.coord(i);
                let chi = region_bump(&k, margin, x, y);
                mu.push(if chi == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    let lam = fam.lambda(Point::new(x, y)?);
                    let i1 = Complex64::new(0.0, 1.0);
                    (lam - i1) / (lam + i1) * chi
                });
            }
        }
        let mut p = Self::new(grid, mu)?;
        p.source = Some(DeltaSource {
            delta: fam.delta(),
            margin,
        });
        Ok(p)
    }

    pub fn sup_mu(&self) -> f64 {
        self.mu.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must be > 0, got {}",
                self.tol
            )));
        }
        if !(self.divergence_factor > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "divergence factor must be > 1, got {}",
                self.divergence_factor
            )));
        }
        self.grid.check(&self.mu)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "iteration")]
pub enum Verdict {
    Converged(usize),
    Diverged(usize),
    MaxIterReached,
}

impl Verdict {
    pub fn converged(&self) -> bool {
        matches!(self, Verdict::Converged(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Converged(_) => "Converged",
            Verdict::Diverged(_) => "Diverged",
            Verdict::MaxIterReached => "MaxIterReached",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Converged(k) => write!(f, "Converged({k})"),
            Verdict::Diverged(k) => write!(f, "Diverged({k})"),
            Verdict::MaxIterReached => write!(f, "MaxIterReached"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    /// `‖φ_k - φ_{k-1}‖∞` for `k = 1, 2, …`.
    pub residuals: Vec<f64>,
    pub verdict: Verdict,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["iter", "residual"])?;
        for (k, r) in self.residuals.iter().enumerate() {
            w.write_record([(k + 1).to_string(), sig6(*r)])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeltramiSolution {
    pub phi: Vec<Complex64>,
    /// `z + Cφ`; only reconstructed on convergence.
    pub w: Option<Vec<Complex64>>,
    pub trace: IterationTrace,
}

fn sup_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| {
        let d = (x - y).norm();
        if d.is_nan() || m.is_nan() {
            f64::NAN
        } else {
            m.max(d)
        }
    })
}

pub fn solve_beltrami_neumann(problem: &BeltramiProblem) -> Result<BeltramiSolution> {
    problem.validate()?;
    let ops = FourierOps::new(problem.grid);
    let mut phi = vec![Complex64::new(0.0, 0.0); problem.grid.len()];
    let mut residuals = Vec::new();
    let mut verdict = Verdict::MaxIterReached;
    for k in 1..=problem.max_iter {
        let s = ops.beurling(&phi)?;
        let next: Vec<Complex64> = problem
            .mu
            .iter()
            .zip(&s)
            .map(|(m, sp)| m * (1.0 + sp))
            .collect();
        let r = sup_diff(&next, &phi);
        residuals.push(r);
        phi = next;
        if r < problem.tol {
            verdict = Verdict::Converged(k);
            break;
        }
        if !r.is_finite() || r > problem.divergence_factor * residuals[0] {
            verdict = Verdict::Diverged(k);
            break;
        }
    }
    let w = if verdict.converged() {
        let c = ops.cauchy(&phi)?;
        Some(
            problem
                .grid
                .z()
                .into_iter()
                .zip(c)
                .map(|(z, c)| z + c)
                .collect(),
        )
    } else {
        None
    };
    Ok(BeltramiSolution {
        phi,
        w,
        trace: IterationTrace { residuals, verdict },
    })
}

/// `sup|μ| · ‖S‖_{Lᵖ}` with `‖S‖_{Lᵖ} = p - 1` for `p ≥ 2`.
pub fn contraction_estimate(sup_mu: f64, p: f64) -> Result<f64> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "exponent p must be >= 2, got {p}"
        )));
    }
    if !(sup_mu >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sup_mu must be >= 0, got {sup_mu}"
        )));
    }
    Ok(sup_mu * (p - 1.0))
}

pub fn near_divergent(contraction: f64) -> bool {
    contraction > NEAR_DIVERGENT
}

/// JSON summary of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeltramiDescriptor {
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub delta: Option<f64>,
    pub truncation_margin: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub divergence_factor: f64,
    pub sup_mu: f64,
    pub contraction_l2: f64,
    pub near_divergent: bool,
    pub iterations: usize,
    pub verdict: Verdict,
}

impl BeltramiDescriptor {
    pub fn new(problem: &BeltramiProblem, trace: &IterationTrace) -> Self {
        let sup_mu = problem.sup_mu();
        let contraction = contraction_estimate(sup_mu, 2.0).unwrap_or(f64::NAN);
        Self {
            n: problem.grid.n,
            l: problem.grid.l,
            delta: problem.source.map(|s| s.delta),
            truncation_margin: problem.source.map(|s| s.margin),
            tol: problem.tol,
            max_iter: problem.max_iter,
            divergence_factor: problem.divergence_factor,
            sup_mu,
            contraction_l2: contraction,
            near_divergent: near_divergent(contraction),
            iterations: trace.iterations(),
            verdict: trace.verdict,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn norm2(f: &[Complex64]) -> f64 {
        f.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn grid_validation() {
        assert!(TorusGrid::new(8, 1.0).is_err());
        assert!(TorusGrid::new(48, 1.0).is_err());
        assert!(TorusGrid::new(32, 0.0).is_err());
        let g = TorusGrid::new(16, 2.0).unwrap();
        assert_eq!(g.coord(0), -2.0);
        assert_eq!(g.coord(8), 0.0);
        assert_eq!(g.wavenumber(15), -std::f64::consts::PI / 2.0);
    }

    #[test]
    fn zero_and_size_mismatch() {
        let g = TorusGrid::new(16, 1.0).unwrap();
        let z = vec![c(0.0, 0.0); g.len()];
        assert!(beurling_transform(&g, &z)
            .unwrap()
            .iter()
            .all(|v| *v == c(0.0, 0.0)));
        assert!(matches!(
            beurling_transform(&g, &z[1..]),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn plane_wave_is_scaled_by_symbol() {
        let g = TorusGrid::new(32, 3.0).unwrap();
        for (m1, m2) in [(1i32, 0i32), (0, 2), (3, -5), (-7, 4)] {
            let (k1, k2) = (
                std::f64::consts::PI * m1 as f64 / 3.0,
                std::f64::consts::PI * m2 as f64 / 3.0,
            );
            let wave: Vec<Complex64> = g
                .z()
                .iter()
                .map(|z| c(0.0, k1 * z.re + k2 * z.im).exp())
                .collect();
            let xi = c(k1, k2);
            let sym = xi.conj() / xi;
            assert!((sym.norm() - 1.0).abs() < 1e-15);
            let s = beurling_transform(&g, &wave).unwrap();
            for (a, b) in s.iter().zip(&wave) {
                assert!((a - sym * b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_mu_fixed_point() {
        let g = TorusGrid::new(32, 4.0).unwrap();
        let p = BeltramiProblem::new(g, vec![c(0.3, -0.2); g.len()]).unwrap();
        let sol = solve_beltrami_neumann(&p).unwrap();
        assert_eq!(sol.trace.verdict, Verdict::Converged(2));
        assert!(sol.phi.iter().all(|v| (v - c(0.3, -0.2)).norm() < 1e-14));
    }

    #[test]
    fn zero_mu_gives_identity_map() {
        let g = TorusGrid::new(16, 4.0).unwrap();
        let p = BeltramiProblem::new(g, vec![c(0.0, 0.0); g.len()]).unwrap();
        let sol = solve_beltrami_neumann(&p).unwrap();
        assert_eq!(sol.trace.verdict, Verdict::Converged(1));
        assert_eq!(sol.w.unwrap(), g.z());
    }

    #[test]
    fn max_iter_zero() {
        let g = TorusGrid::new(16, 4.0).unwrap();
        let mut p = BeltramiProblem::new(g, vec![c(0.5, 0.0); g.len()]).unwrap();
        p.max_iter = 0;
        let sol = solve_beltrami_neumann(&p).unwrap();
        assert_eq!(sol.trace.verdict, Verdict::MaxIterReached);
        assert!(sol.trace.residuals.is_empty());
        assert!(sol.w.is_none());
    }

    #[test]
    fn oversized_mu_diverges() {
        // A single mode with |μ| = 3 amplifies every iterate.
        let g = TorusGrid::new(16, 4.0).unwrap();
        let mu: Vec<Complex64> = g
            .z()
            .iter()
            .map(|z| c(3.0, 0.0) * c(0.0, std::f64::consts::PI / 4.0 * z.re).exp())
            .collect();
        let sol = solve_beltrami_neumann(&BeltramiProblem::new(g, mu).unwrap()).unwrap();
        assert!(matches!(sol.trace.verdict, Verdict::Diverged(_)));
    }

    #[test]
    fn converged_solution_satisfies_beltrami() {
        let g = TorusGrid::new(64, 4.0).unwrap();
        let p = BeltramiProblem::delta_family(&DeltaFamily::new(1.0).unwrap(), g, DEFAULT_MARGIN)
            .unwrap();
        let sol = solve_beltrami_neumann(&p).unwrap();
        assert!(sol.trace.verdict.converged());
        let ops = FourierOps::new(g);
        // w_z̄ = φ and w_z = 1 + Sφ on the periodic part
        let s = ops.beurling(&sol.phi).unwrap();
        for ((phi, m), sp) in sol.phi.iter().zip(&p.mu).zip(&s) {
            assert!((phi - m * (1.0 + sp)).norm() < 1e-9);
        }
    }

    #[test]
    fn isometry_on_mean_zero_grid() {
        let g = TorusGrid::new(32, 2.0).unwrap();
        let mut f: Vec<Complex64> = (0..g.len())
            .map(|k| {
                c(
                    ((k * 37) % 101) as f64 - 50.0,
                    ((k * 53) % 89) as f64 - 44.0,
                )
            })
            .collect();
        let mean = f.iter().sum::<Complex64>() / f.len() as f64;
        f.iter_mut().for_each(|v| *v -= mean);
        let s = beurling_transform(&g, &f).unwrap();
        assert!((norm2(&s) - norm2(&f)).abs() < 1e-12 * norm2(&f));
    }

    #[test]
    fn spectral_derivatives_of_exponential_mode() {
        let g = TorusGrid::new(32, 1.0).unwrap();
        let (k1, k2) = (std::f64::consts::PI * 2.0, std::f64::consts::PI * -3.0);
        let f: Vec<Complex64> = g
            .z()
            .iter()
            .map(|z| c(0.0, k1 * z.re + k2 * z.im).exp())
            .collect();
        let ops = FourierOps::new(g);
        let db = ops.dbar(&f).unwrap();
        let cf = ops.cauchy(&db).unwrap();
        for (a, b) in cf.iter().zip(&f) {
            assert!((a - b).norm() < 1e-12);
        }
        let want = c(0.0, 0.5) * c(k1, -k2);
        for (a, b) in ops.d(&f).unwrap().iter().zip(&f) {
            assert!((a - want * b).norm() < 1e-11);
        }
    }

    #[test]
    fn bump_is_one_on_window_and_zero_outside() {
        let k = Region::compact_window();
        assert_eq!(region_bump(&k, 0.25, 0.0, 0.0), 1.0);
        assert_eq!(region_bump(&k, 0.25, -0.5, 1.0), 1.0);
        assert_eq!(region_bump(&k, 0.25, -0.75, 0.0), 0.0);
        assert_eq!(region_bump(&k, 0.25, 0.0, 1.3), 0.0);
        assert!((region_bump(&k, 0.25, 1.125, 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn contraction_examples() {
        assert_eq!(contraction_estimate(0.5, 2.0).unwrap(), 0.5);
        assert!((contraction_estimate(0.4, 3.0).unwrap() - 0.8).abs() < 1e-15);
        assert!(contraction_estimate(0.5, 1.5).is_err());
        let c = contraction_estimate(0.99203, 2.0).unwrap();
        assert!((c - 0.992).abs() < 1e-3 && near_divergent(c));
        assert!(!near_divergent(contraction_estimate(0.62, 2.0).unwrap()));
    }

    #[test]
    fn trace_csv_and_descriptor() {
        let t = IterationTrace {
            residuals: vec![0.5, 1.25e-11],
            verdict: Verdict::Converged(2),
        };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "iter,residual\n1,0.5\n2,1.25e-11\n"
        );
        assert_eq!(Verdict::Converged(2).to_string(), "Converged(2)");
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<IterationTrace>(&json).unwrap(), t);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn field(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
                .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn beurling_is_linear(
                f in field(16),
                g in field(16),
                a in (-3.0f64..3.0, -3.0f64..3.0),
                b in (-3.0f64..3.0, -3.0f64..3.0),
            ) {
                let grid = TorusGrid::new(16, 2.0).unwrap();
                let (a, b) = (Complex64::new(a.0, a.1), Complex64::new(b.0, b.1));
                let mix: Vec<Complex64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
                let ops = FourierOps::new(grid);
                let (sf, sg, sm) = (ops.beurling(&f).unwrap(), ops.beurling(&g).unwrap(), ops.beurling(&mix).unwrap());
                let scale = norm2(&mix).max(1.0);
                let err: f64 = sm.iter().zip(sf.iter().zip(&sg))
                    .map(|(m, (x, y))| (m - (a * x + b * y)).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                prop_assert!(err < 1e-12 * scale);
            }

            #[test]
            fn beurling_is_isometric_on_mean_zero(mut f in field(32)) {
                let grid = TorusGrid::new(32, 3.0).unwrap();
                let mean = f.iter().sum::<Complex64>() / f.len() as f64;
                f.iter_mut().for_each(|v| *v -= mean);
                let s = beurling_transform(&grid, &f).unwrap();
                prop_assert!((norm2(&s) - norm2(&f)).abs() < 1e-12 * norm2(&f));
            }
        }
    }
}
