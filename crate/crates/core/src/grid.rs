//! Regular Cartesian grids and sampled symmetric tensor fields.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::symtensor::{component_count, multi_indices, SymTensor};

/// A regular grid with nodes `origin_j + i * spacing_j`, `0 <= i < sizes_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub sizes: Vec<usize>,
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
}

impl Grid {
    pub fn new(sizes: Vec<usize>, origin: Vec<f64>, spacing: Vec<f64>) -> Result<Self> {
        if sizes.len() != origin.len() || sizes.len() != spacing.len() {
            return Err(Error::DimensionMismatch {
                expected: sizes.len(),
                found: origin.len().min(spacing.len()),
            });
        }
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(invalid("sizes", "every axis needs at least one node"));
        }
        if spacing.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(invalid("spacing", "must be positive and finite"));
        }
        Ok(Self { sizes, origin, spacing })
    }

    /// Periodic-style grid on `[-L/2, L/2)` per axis with `h = L / N`.
    pub fn centered(sizes: &[usize], lengths: &[f64]) -> Result<Self> {
        if sizes.len() != lengths.len() {
            return Err(Error::DimensionMismatch {
                expected: sizes.len(),
                found: lengths.len(),
            });
        }
        let spacing: Vec<f64> = sizes.iter().zip(lengths).map(|(&n, &l)| l / n as f64).collect();
        let origin = lengths.iter().map(|&l| -l / 2.0).collect();
        Self::new(sizes.to_vec(), origin, spacing)
    }

    /// Square grid of `size^dim` nodes on `[-length/2, length/2)^dim`.
    pub fn cube(dim: usize, size: usize, length: f64) -> Result<Self> {
        Self::centered(&vec![size; dim], &vec![length; dim])
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn node_count(&self) -> usize {
        self.sizes.iter().product()
    }

    /// Physical period `N h` of each axis.
    pub fn lengths(&self) -> Vec<f64> {
        self.sizes
            .iter()
            .zip(&self.spacing)
            .map(|(&n, &h)| n as f64 * h)
            .collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Row-major multi-index of a flat node index (last axis fastest).
    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        let mut rem = flat;
        for axis in (0..self.dim()).rev() {
            idx[axis] = rem % self.sizes[axis];
            rem /= self.sizes[axis];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.sizes).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.spacing[axis]
    }

    pub fn point_of(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(axis, &i)| self.coordinate(axis, i))
            .collect()
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.point_of(&self.multi_index(flat))
    }

    /// All node positions in flat order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.node_count()).map(|i| self.point(i)).collect()
    }

    /// Sub-grid obtained by removing `trim` nodes from both ends of every axis.
    pub fn trimmed(&self, trim: usize) -> Result<Grid> {
        let required = 2 * trim + 1;
        if let Some(&available) = self.sizes.iter().find(|&&s| s < required) {
            return Err(Error::GridExhausted { required, available });
        }
        Grid::new(
            self.sizes.iter().map(|&s| s - 2 * trim).collect(),
            self.origin
                .iter()
                .zip(&self.spacing)
                .map(|(&o, &h)| o + trim as f64 * h)
                .collect(),
            self.spacing.clone(),
        )
    }

    /// Mask of nodes at least `ring` cells away from every face.
    pub fn interior_mask(&self, ring: usize) -> Vec<bool> {
        (0..self.node_count())
            .map(|flat| {
                self.multi_index(flat)
                    .iter()
                    .zip(&self.sizes)
                    .all(|(&i, &n)| i >= ring && i + ring < n)
            })
            .collect()
    }

    pub fn same_geometry(&self, other: &Grid) -> bool {
        self.sizes == other.sizes
            && self
                .origin
                .iter()
                .zip(&other.origin)
                .chain(self.spacing.iter().zip(&other.spacing))
                .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0))
    }
}

/// Anything that can be evaluated as a symmetric tensor at a point.
///
/// `eval_into` writes the stored components (nondecreasing multi-index order).
pub trait FieldEval: Sync {
    fn dim(&self) -> usize;
    fn order(&self) -> usize;
    fn eval_into(&self, x: &[f64], out: &mut [f64]);

    /// Ball `(center, radius)` outside which the field is negligible.
    fn support(&self) -> Option<(Vec<f64>, f64)> {
        None
    }

    fn eval(&self, x: &[f64]) -> SymTensor {
        let mut out = vec![0.0; component_count(self.dim(), self.order())];
        self.eval_into(x, &mut out);
        SymTensor::from_components(self.dim(), self.order(), out).expect("component count is consistent")
    }
}

/// A field given by a closure returning stored components.
pub struct FnField<F> {
    pub dim: usize,
    pub order: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> FieldEval for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn order(&self) -> usize {
        self.order
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }
}

/// A symmetric `m`-tensor field sampled on a grid. Each stored component
/// is a row-major array over the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField {
    pub grid: Grid,
    pub order: usize,
    pub components: Vec<Vec<f64>>,
}

impl SymTensorField {
    pub fn zeros(grid: Grid, order: usize) -> Self {
        let count = component_count(grid.dim(), order);
        let nodes = grid.node_count();
        Self {
            grid,
            order,
            components: vec![vec![0.0; nodes]; count],
        }
    }

    pub fn new(grid: Grid, order: usize, components: Vec<Vec<f64>>) -> Result<Self> {
        let count = component_count(grid.dim(), order);
        if components.len() != count {
            return Err(Error::DimensionMismatch {
                expected: count,
                found: components.len(),
            });
        }
        let nodes = grid.node_count();
        if let Some(bad) = components.iter().find(|c| c.len() != nodes) {
            return Err(Error::DimensionMismatch {
                expected: nodes,
                found: bad.len(),
            });
        }
        Ok(Self {
            grid,
            order,
            components,
        })
    }

    /// Samples `field` at every node.
    pub fn sample(field: &dyn FieldEval, grid: &Grid) -> Self {
        let count = component_count(grid.dim(), field.order());
        let values: Vec<Vec<f64>> = (0..grid.node_count())
            .into_par_iter()
            .map_init(
                || vec![0.0; count],
                |buf, flat| {
                    field.eval_into(&grid.point(flat), buf);
                    buf.clone()
                },
            )
            .collect();
        let mut components = vec![vec![0.0; grid.node_count()]; count];
        for (flat, v) in values.into_iter().enumerate() {
            for (c, value) in components.iter_mut().zip(v) {
                c[flat] = value;
            }
        }
        Self {
            grid: grid.clone(),
            order: field.order(),
            components,
        }
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn component_indices(&self) -> Vec<Vec<usize>> {
        multi_indices(self.dim(), self.order)
    }

    /// Component array for an arbitrary index tuple.
    pub fn component(&self, index: &[usize]) -> &[f64] {
        &self.components[crate::symtensor::component_position(self.dim(), index)]
    }

    pub fn at_node(&self, flat: usize) -> SymTensor {
        SymTensor::from_components(
            self.dim(),
            self.order,
            self.components.iter().map(|c| c[flat]).collect(),
        )
        .expect("component count is consistent")
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().flatten().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.components.iter_mut().flatten().for_each(|v| *v *= factor);
        out
    }

    /// `self + factor * other` on matching geometry.
    pub fn axpy(&self, factor: f64, other: &SymTensorField) -> Result<Self> {
        if !self.grid.same_geometry(&other.grid) || self.order != other.order {
            return Err(Error::Metadata("fields live on different grids or orders".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.components.iter_mut().zip(&other.components) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += factor * y;
            }
        }
        Ok(out)
    }

    /// Restriction to the sub-grid `trimmed(trim)`.
    pub fn trimmed(&self, trim: usize) -> Result<Self> {
        let grid = self.grid.trimmed(trim)?;
        let components = self
            .components
            .iter()
            .map(|c| {
                (0..grid.node_count())
                    .map(|flat| {
                        let idx: Vec<usize> = grid.multi_index(flat).iter().map(|i| i + trim).collect();
                        c[self.grid.flat_index(&idx)]
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            grid,
            order: self.order,
            components,
        })
    }
}

/// Cubic Lagrange weights for offsets `-1, 0, 1, 2` at fractional position `t`.
fn cubic_weights(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

impl FieldEval for SymTensorField {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn order(&self) -> usize {
        self.order
    }

    /// Interpolation reaches one cell past the outermost nodes.
    fn support(&self) -> Option<(Vec<f64>, f64)> {
        let g = &self.grid;
        let center = (0..g.dim())
            .map(|a| g.origin[a] + 0.5 * (g.sizes[a] as f64 - 1.0) * g.spacing[a])
            .collect();
        let r2: f64 = (0..g.dim())
            .map(|a| (0.5 * (g.sizes[a] as f64 + 1.0) * g.spacing[a]).powi(2))
            .sum();
        Some((center, r2.sqrt()))
    }

    /// Separable 4-point Lagrange interpolation; nodes outside the grid read as zero.
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let n = self.dim();
        let mut base = [0isize; 8];
        let mut weights = [[0.0f64; 4]; 8];
        for axis in 0..n {
            let u = (x[axis] - self.grid.origin[axis]) / self.grid.spacing[axis];
            if !(u > -1.0 && u < self.grid.sizes[axis] as f64) {
                return;
            }
            let i0 = u.floor();
            base[axis] = i0 as isize - 1;
            weights[axis] = cubic_weights(u - i0);
        }
        let combos = 4usize.pow(n as u32);
        for combo in 0..combos {
            let mut rem = combo;
            let mut flat = 0usize;
            let mut w = 1.0;
            let mut inside = true;
            for axis in 0..n {
                let o = rem % 4;
                rem /= 4;
                let i = base[axis] + o as isize;
                if i < 0 || i >= self.grid.sizes[axis] as isize {
                    inside = false;
                    break;
                }
                flat = flat * self.grid.sizes[axis] + i as usize;
                w *= weights[axis][o];
            }
            if !inside || w == 0.0 {
                continue;
            }
            for (v, c) in out.iter_mut().zip(&self.components) {
                *v += w * c[flat];
            }
        }
    }
}
