//! Forward divergent beam transforms.
//!
//! `D^{k,m} f(x, xi) = int_0^inf t^k <f(x + t xi), xi^m> dt` and the
//! fractional variant with weight `t^{2s-1}` share one implementation driven
//! by the exponent `w > -1`. The head `[0, 1]` uses Gauss-Jacobi nodes for
//! the weight `t^w`; the tail `[1, T]` uses doubling panels of Gauss-Legendre
//! nodes, bisected until an embedded lower-order rule agrees.

use std::num::NonZeroUsize;

use gauss_quad::{FiniteAboveNegOneF64, GaussJacobi, GaussLegendre};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{FieldEval, Grid, SymTensorField};
use crate::sphere::DirectionSet;
use crate::symtensor::{component_count, power_weights};

/// Ray weight `t^k` (moment) or `t^{2s-1}` (fractional).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RayWeight {
    Moment(u32),
    Fractional(f64),
    /// Raw exponent `w > -1`.
    Exponent(f64),
}

impl RayWeight {
    pub fn exponent(&self) -> f64 {
        match *self {
            RayWeight::Moment(k) => k as f64,
            RayWeight::Fractional(s) => 2.0 * s - 1.0,
            RayWeight::Exponent(w) => w,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.exponent();
        if !(w > -1.0 && w.is_finite()) {
            return Err(Error::Domain(format!("ray weight exponent {w} must exceed -1")));
        }
        Ok(())
    }

    /// Weight after one momentum reduction `t^w -> t^{w-1}`.
    pub fn reduced(&self) -> Result<RayWeight> {
        match *self {
            RayWeight::Moment(k) if k >= 1 => Ok(RayWeight::Moment(k - 1)),
            RayWeight::Moment(_) => Err(invalid("weight", "moment reduction needs k >= 1")),
            RayWeight::Fractional(_) | RayWeight::Exponent(_) => {
                let w = self.exponent();
                if w > 0.0 {
                    Ok(RayWeight::Exponent(w - 1.0))
                } else {
                    Err(invalid("weight", "reduction needs exponent > 0"))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss-Jacobi nodes on `[0, 1]` for the weight `t^w`.
    pub head_nodes: usize,
    /// Gauss-Legendre nodes per tail panel (an `n/2`-point rule is embedded
    /// as the error estimate).
    pub tail_nodes: usize,
    /// Ray cutoff `T`.
    pub truncation: f64,
    /// Target accuracy relative to the ray's `L^1` scale.
    pub tail_tol: f64,
    /// Maximum bisection depth per base panel.
    pub max_depth: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            head_nodes: 20,
            tail_nodes: 16,
            truncation: 32.0,
            tail_tol: 1e-10,
            max_depth: 10,
        }
    }
}

impl QuadratureSpec {
    /// Smallest `T` with `<T>^{-decay} T^w < tol`, the tail bound for fields
    /// decaying like `<x>^{-decay}` along the ray.
    pub fn truncation_for(w: f64, decay: f64, tol: f64) -> f64 {
        let mut t: f64 = 1.0;
        while (1.0 + t * t).sqrt().powf(-decay) * t.powf(w) >= tol && t < 1e8 {
            t *= 1.05;
        }
        t
    }

    fn validate(&self) -> Result<()> {
        if self.head_nodes == 0 || self.tail_nodes < 2 {
            return Err(invalid("quadrature", "need head_nodes >= 1 and tail_nodes >= 2"));
        }
        if !(self.truncation > 1.0) {
            return Err(invalid("truncation", "must exceed 1"));
        }
        if !(self.tail_tol > 0.0) {
            return Err(invalid("tail_tol", "must be positive"));
        }
        Ok(())
    }
}

/// Result of a single ray integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamValue {
    pub value: f64,
    /// The input direction was not unit length and was normalized.
    pub normalized: bool,
}

/// Precomputed nodes for one weight exponent.
#[derive(Debug, Clone)]
pub struct RayIntegrator {
    weight: RayWeight,
    spec: QuadratureSpec,
    head_hi: Vec<(f64, f64)>,
    head_lo: Vec<(f64, f64)>,
    tail_hi: Vec<(f64, f64)>,
    tail_lo: Vec<(f64, f64)>,
}

fn legendre(n: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(NonZeroUsize::new(n).expect("positive"))
        .as_node_weight_pairs()
        .to_vec()
}

impl RayIntegrator {
    pub fn new(weight: RayWeight, spec: &QuadratureSpec) -> Result<Self> {
        weight.validate()?;
        spec.validate()?;
        let w = weight.exponent();
        let beta = FiniteAboveNegOneF64::new(w).ok_or_else(|| Error::Domain(format!("exponent {w} must exceed -1")))?;
        let alpha = FiniteAboveNegOneF64::new(0.0).expect("zero is valid");
        // t = (1+x)/2 on [0,1]: t^w dt = 2^{-w-1} (1+x)^w dx
        let factor = 2f64.powf(-w - 1.0);
        let jacobi = |nodes: usize| -> Vec<(f64, f64)> {
            GaussJacobi::new(NonZeroUsize::new(nodes.max(1)).expect("positive"), alpha, beta)
                .as_node_weight_pairs()
                .iter()
                .map(|&(x, wt)| ((1.0 + x) / 2.0, wt * factor))
                .collect()
        };
        Ok(Self {
            weight,
            spec: spec.clone(),
            head_hi: jacobi(spec.head_nodes),
            head_lo: jacobi(spec.head_nodes / 2),
            tail_hi: legendre(spec.tail_nodes),
            tail_lo: legendre(spec.tail_nodes / 2),
        })
    }

    pub fn weight(&self) -> RayWeight {
        self.weight
    }

    /// `int_0^T t^w <f(x + t xi), xi^m> dt`.
    pub fn integrate(&self, field: &dyn FieldEval, x: &[f64], xi: &[f64]) -> Result<BeamValue> {
        let n = field.dim();
        if x.len() != n || xi.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if x.len() != n { x.len() } else { xi.len() },
            });
        }
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(invalid("xi", "direction must be nonzero"));
        }
        let normalized = (norm - 1.0).abs() > 1e-14;
        let dir: Vec<f64> = xi.iter().map(|v| v / norm).collect();
        let mut ray = Ray::new(field, x, &dir);
        Ok(BeamValue {
            value: self.integrate_ray(&mut ray),
            normalized,
        })
    }

    fn integrate_ray(&self, ray: &mut Ray<'_>) -> f64 {
        let w = self.weight.exponent();
        let (t_in, t_max) = match ray.support_interval(self.spec.truncation) {
            Some(span) => span,
            None => return 0.0,
        };
        let mut scale = 0.0;
        let mut head = None;
        if t_in < 1.0 {
            let (h, l1) = self.head(ray, 1.0, &self.head_hi, w);
            scale += l1;
            head = Some(h);
        }
        let mut panels = Vec::new();
        let mut a = 1.0;
        while a < t_max {
            let b = (2.0 * a).min(t_max);
            if b > t_in {
                let lo = a.max(t_in);
                let (hi, l1) = self.panel(ray, lo, b, &self.tail_hi, w);
                scale += l1;
                panels.push((lo, b, hi));
            }
            a = b;
        }
        let mut total = match head {
            Some(h) => self.refine_head(ray, 1.0, h, w, scale, 0),
            None => 0.0,
        };
        for (a, b, hi) in panels {
            total += self.refine(ray, a, b, hi, w, scale, 0);
        }
        total
    }

    /// Embedded-rule threshold: for analytic integrands an `n/2`-point rule
    /// within `sqrt(tol)` of the `n`-point rule leaves the latter within `tol`.
    fn accept(&self, scale: f64) -> f64 {
        self.spec.tail_tol.sqrt() * scale
    }

    /// `int_0^l t^w g dt = l^{w+1} sum_j w_j g(l t_j)`.
    fn head(&self, ray: &mut Ray<'_>, l: f64, rule: &[(f64, f64)], w: f64) -> (f64, f64) {
        let factor = l.powf(w + 1.0);
        let mut sum = 0.0;
        let mut l1 = 0.0;
        for &(t, wt) in rule {
            let g = factor * wt * ray.at(l * t);
            sum += g;
            l1 += g.abs();
        }
        (sum, l1)
    }

    fn refine_head(&self, ray: &mut Ray<'_>, l: f64, hi: f64, w: f64, scale: f64, depth: usize) -> f64 {
        let (lo, _) = self.head(ray, l, &self.head_lo, w);
        if (hi - lo).abs() <= self.accept(scale) || depth >= self.spec.max_depth {
            return hi;
        }
        let m = 0.5 * l;
        let (left, _) = self.head(ray, m, &self.head_hi, w);
        let (right, _) = self.panel(ray, m, l, &self.tail_hi, w);
        self.refine_head(ray, m, left, w, scale, depth + 1) + self.refine(ray, m, l, right, w, scale, depth + 1)
    }

    fn panel(&self, ray: &mut Ray<'_>, a: f64, b: f64, rule: &[(f64, f64)], w: f64) -> (f64, f64) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        let mut l1 = 0.0;
        for &(x, wt) in rule {
            let t = mid + half * x;
            let g = ray.at(t) * t.powf(w) * wt * half;
            sum += g;
            l1 += g.abs();
        }
        (sum, l1)
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(&self, ray: &mut Ray<'_>, a: f64, b: f64, hi: f64, w: f64, scale: f64, depth: usize) -> f64 {
        let (lo, _) = self.panel(ray, a, b, &self.tail_lo, w);
        if (hi - lo).abs() <= self.accept(scale) || depth >= self.spec.max_depth {
            return hi;
        }
        let m = 0.5 * (a + b);
        let (left, _) = self.panel(ray, a, m, &self.tail_hi, w);
        let (right, _) = self.panel(ray, m, b, &self.tail_hi, w);
        self.refine(ray, a, m, left, w, scale, depth + 1) + self.refine(ray, m, b, right, w, scale, depth + 1)
    }
}

/// Integrand `t -> <f(x + t xi), xi^m>` with reusable buffers.
struct Ray<'a> {
    field: &'a dyn FieldEval,
    x: &'a [f64],
    dir: &'a [f64],
    weights: Vec<f64>,
    point: Vec<f64>,
    values: Vec<f64>,
}

impl<'a> Ray<'a> {
    fn new(field: &'a dyn FieldEval, x: &'a [f64], dir: &'a [f64]) -> Self {
        Self {
            field,
            x,
            dir,
            weights: power_weights(dir, field.order()),
            point: vec![0.0; x.len()],
            values: vec![0.0; component_count(field.dim(), field.order())],
        }
    }

    fn at(&mut self, t: f64) -> f64 {
        for ((p, x), d) in self.point.iter_mut().zip(self.x).zip(self.dir) {
            *p = x + t * d;
        }
        self.field.eval_into(&self.point, &mut self.values);
        self.values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// `[t_in, t_out]` of the ray inside the field's support ball, clipped
    /// to `[0, t_max]`; `None` when the ray misses it.
    fn support_interval(&self, t_max: f64) -> Option<(f64, f64)> {
        let Some((center, radius)) = self.field.support() else {
            return Some((0.0, t_max));
        };
        let mut b = 0.0;
        let mut p2 = 0.0;
        for ((x, c), d) in self.x.iter().zip(&center).zip(self.dir) {
            b += (x - c) * d;
            p2 += (x - c) * (x - c);
        }
        let disc = b * b - (p2 - radius * radius);
        if disc <= 0.0 {
            return None;
        }
        let root = disc.sqrt();
        let (t_in, t_out) = ((-b - root).max(0.0), (-b + root).min(t_max));
        (t_out > t_in).then_some((t_in, t_out))
    }
}

/// Single ray integral with a freshly built rule.
pub fn beam_integral(
    field: &dyn FieldEval,
    x: &[f64],
    xi: &[f64],
    weight: RayWeight,
    quad: &QuadratureSpec,
) -> Result<BeamValue> {
    RayIntegrator::new(weight, quad)?.integrate(field, x, xi)
}

/// Transform values on a source set times a direction set.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSamples {
    pub dim: usize,
    pub order: usize,
    pub weight: RayWeight,
    pub sources: Vec<Vec<f64>>,
    /// Present when `sources` are exactly the nodes of a grid, in flat order.
    pub source_grid: Option<Grid>,
    pub directions: DirectionSet,
    /// Row-major `sources x directions`.
    pub values: Vec<f64>,
}

impl BeamSamples {
    pub fn value(&self, source: usize, direction: usize) -> f64 {
        self.values[source * self.directions.len() + direction]
    }

    /// Values of one direction over all sources.
    pub fn direction_column(&self, direction: usize) -> Vec<f64> {
        let nd = self.directions.len();
        (0..self.sources.len())
            .map(|s| self.values[s * nd + direction])
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }
}

/// Diagnostics of a forward run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub rays: usize,
    pub normalized_directions: usize,
    /// Sources outside the sampling grid of a grid-backed field.
    pub sources_outside_grid: usize,
    /// Largest field magnitude on the outer ring of a grid-backed field.
    pub boundary_magnitude: f64,
    pub peak_magnitude: f64,
    pub flagged: bool,
}

/// Evaluates the transform at every (source, direction) pair.
pub fn forward(
    field: &dyn FieldEval,
    sources: Vec<Vec<f64>>,
    source_grid: Option<Grid>,
    directions: &DirectionSet,
    weight: RayWeight,
    quad: &QuadratureSpec,
) -> Result<(BeamSamples, QualityReport)> {
    if directions.is_empty() {
        return Err(invalid("directions", "direction set is empty"));
    }
    if directions.dim != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            found: directions.dim,
        });
    }
    let integrator = RayIntegrator::new(weight, quad)?;
    let rows: Vec<Result<(Vec<f64>, usize)>> = sources
        .par_iter()
        .map(|x| {
            let mut row = Vec::with_capacity(directions.len());
            let mut normalized = 0;
            for xi in &directions.directions {
                let v = integrator.integrate(field, x, xi)?;
                normalized += usize::from(v.normalized);
                row.push(v.value);
            }
            Ok((row, normalized))
        })
        .collect();
    let mut values = Vec::with_capacity(sources.len() * directions.len());
    let mut report = QualityReport {
        rays: sources.len() * directions.len(),
        ..Default::default()
    };
    for row in rows {
        let (row, normalized) = row?;
        values.extend(row);
        report.normalized_directions += normalized;
    }
    Ok((
        BeamSamples {
            dim: field.dim(),
            order: field.order(),
            weight,
            sources,
            source_grid,
            directions: directions.clone(),
            values,
        },
        report,
    ))
}

/// Forward transform from every node of `grid`.
pub fn forward_grid(
    field: &dyn FieldEval,
    grid: &Grid,
    directions: &DirectionSet,
    weight: RayWeight,
    quad: &QuadratureSpec,
) -> Result<(BeamSamples, QualityReport)> {
    forward(field, grid.points(), Some(grid.clone()), directions, weight, quad)
}

/// Forward transform of a grid-sampled field (cubic interpolation, zero
/// outside the grid), flagging sources outside the grid while the field is
/// non-negligible at its boundary.
pub fn forward_sampled(
    field: &SymTensorField,
    sources: &Grid,
    directions: &DirectionSet,
    weight: RayWeight,
    quad: &QuadratureSpec,
) -> Result<(BeamSamples, QualityReport)> {
    let (samples, mut report) = forward(field, sources.points(), Some(sources.clone()), directions, weight, quad)?;
    let g = &field.grid;
    let boundary = g.interior_mask(1);
    let mut boundary_mag: f64 = 0.0;
    for c in &field.components {
        for (v, inside) in c.iter().zip(&boundary) {
            if !inside {
                boundary_mag = boundary_mag.max(v.abs());
            }
        }
    }
    let outside = samples
        .sources
        .iter()
        .filter(|x| {
            x.iter().enumerate().any(|(axis, &xa)| {
                let lo = g.origin[axis];
                let hi = g.coordinate(axis, g.sizes[axis] - 1);
                xa < lo || xa > hi
            })
        })
        .count();
    report.boundary_magnitude = boundary_mag;
    report.peak_magnitude = field.max_abs();
    report.sources_outside_grid = outside;
    report.flagged = outside > 0 && boundary_mag > 1e-12 * report.peak_magnitude.max(f64::MIN_POSITIVE);
    Ok((samples, report))
}

/// 4th-order central difference weights for offsets `-2..=2`.
const FD4: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];

/// `sum_k xi^k d/dx_k` of grid-sourced samples, on the grid trimmed by 2.
pub fn directional_derivative(samples: &BeamSamples) -> Result<BeamSamples> {
    let grid = samples
        .source_grid
        .as_ref()
        .ok_or_else(|| invalid("samples", "derivatives need samples on a source grid"))?;
    let out_grid = grid.trimmed(2)?;
    let nd = samples.directions.len();
    let n = grid.dim();
    let values: Vec<f64> = (0..out_grid.node_count())
        .into_par_iter()
        .flat_map_iter(|flat| {
            let idx: Vec<usize> = out_grid.multi_index(flat).iter().map(|i| i + 2).collect();
            let mut row = vec![0.0; nd];
            let mut probe = idx.clone();
            for axis in 0..n {
                let h = grid.spacing[axis];
                for (o, &c) in FD4.iter().enumerate() {
                    if c == 0.0 {
                        continue;
                    }
                    probe[axis] = idx[axis] + o - 2;
                    let src = grid.flat_index(&probe);
                    for (d, r) in row.iter_mut().enumerate() {
                        *r += samples.directions.directions[d][axis] * c / h * samples.values[src * nd + d];
                    }
                }
                probe[axis] = idx[axis];
            }
            row
        })
        .collect();
    Ok(BeamSamples {
        dim: samples.dim,
        order: samples.order,
        weight: samples.weight,
        sources: out_grid.points(),
        source_grid: Some(out_grid),
        directions: samples.directions.clone(),
        values,
    })
}

/// One momentum reduction `t^w -> t^{w-1}` using
/// `sum_k xi^k d_k D^{w} = -w D^{w-1}`; trims two nodes per side.
pub fn momentum_reduce(samples: &BeamSamples) -> Result<BeamSamples> {
    let reduced = samples.weight.reduced()?;
    let w = samples.weight.exponent();
    let mut out = directional_derivative(samples)?;
    out.values.iter_mut().for_each(|v| *v *= -1.0 / w);
    out.weight = reduced;
    Ok(out)
}
