//! Rectangular lattices recovered from scattered `(x, y)` rows.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::fields::{GridSpec, Region};

#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn find(axis: &[f64], v: f64) -> usize {
    axis.binary_search_by(|a| a.total_cmp(&v))
        .expect("coordinate taken from the same rows")
}

impl Lattice {
    pub fn uniform(region: &Region, grid: &GridSpec) -> Self {
        Self {
            xs: grid.x_coords(region),
            ys: grid.y_coords(region),
        }
    }

    /// Recovers the lattice spanned by `coords` and, for every input row, its
    /// row-major linear index. Fails unless the rows cover each lattice node
    /// exactly once.
    pub fn infer(coords: &[(f64, f64)]) -> Result<(Self, Vec<usize>)> {
        let xs = sorted_unique(coords.iter().map(|c| c.0).collect());
        let ys = sorted_unique(coords.iter().map(|c| c.1).collect());
        if xs.len() < 2 || ys.len() < 2 {
            return Err(Error::Parse(format!(
                "need at least a 2 x 2 lattice, got {} x {}",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() * ys.len() != coords.len() {
            return Err(Error::Parse(format!(
                "{} rows do not form a rectangular {} x {} lattice",
                coords.len(),
                xs.len(),
                ys.len()
            )));
        }
        let mut seen = vec![false; coords.len()];
        let mut order = Vec::with_capacity(coords.len());
        for &(x, y) in coords {
            let k = find(&ys, y) * xs.len() + find(&xs, x);
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::Parse(format!("duplicate lattice node ({x}, {y})")));
            }
            order.push(k);
        }
        Ok((Self { xs, ys }, order))
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn bounds(&self) -> Region {
        Region::new(
            self.xs[0],
            *self.xs.last().unwrap(),
            self.ys[0],
            *self.ys.last().unwrap(),
        )
        .expect("lattice axes are strictly increasing")
    }

    /// The uniform grid this lattice samples, if its spacing is uniform to
    /// `1e-9` relative.
    pub fn as_uniform(&self) -> Result<(Region, GridSpec)> {
        let region = Region::new(
            self.xs[0],
            *self.xs.last().unwrap(),
            self.ys[0],
            *self.ys.last().unwrap(),
        )?;
        let grid = GridSpec::new(self.xs.len(), self.ys.len())?;
        let check = |axis: &[f64], expect: Vec<f64>, span: f64| {
            axis.iter()
                .zip(expect)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * span)
        };
        let ok = check(
            &self.xs,
            grid.x_coords(&region),
            region.x_max() - region.x_min(),
        ) && check(
            &self.ys,
            grid.y_coords(&region),
            region.y_max() - region.y_min(),
        );
        if !ok {
            return Err(Error::Parse("lattice spacing is not uniform".into()));
        }
        Ok((region, grid))
    }

    /// Cell corner indices and local coordinates `(s, t) ∈ [0,1]²` for
    /// bilinear interpolation, or `None` outside the lattice.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize, usize, usize, f64, f64)> {
        let (i, s) = cell(&self.xs, x)?;
        let (j, t) = cell(&self.ys, y)?;
        let nx = self.xs.len();
        let k00 = j * nx + i;
        Some((k00, k00 + 1, k00 + nx, k00 + nx + 1, s, t))
    }
}

fn cell(axis: &[f64], v: f64) -> Option<(usize, f64)> {
    let n = axis.len();
    if v.partial_cmp(&axis[0]) == Some(Ordering::Less) || v > axis[n - 1] || v.is_nan() {
        return None;
    }
    let i = axis.partition_point(|&a| a <= v).clamp(1, n - 1) - 1;
    Some((i, (v - axis[i]) / (axis[i + 1] - axis[i])))
}
