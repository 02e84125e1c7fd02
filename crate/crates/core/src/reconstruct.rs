//! Inversion procedures.
//!
//! Pointwise recovery of an `m`-tensor from `D^{0,m}` rests on
//! `sum_r Theta_r |Theta|^{m-1} d_r D^{0,m} f(x, Theta/|Theta|) = -<f(x), Theta^m>`
//! for the direction sums `Theta_J` of the polarization identity. With
//! `xi_j = e_{i_j}` every `Theta_J` is a nonnegative integer count vector, so
//! distinct directions are evaluated once. Weighted data `D^{k,m}` is first
//! reduced `k` times. The spectral routes invert the averages of the
//! fractional transform for `m = 1, 2`.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averaging::AverageField;
use crate::error::{invalid, Error, Result};
use crate::grid::SymTensorField;
use crate::raytransform::{momentum_reduce, BeamSamples, RayWeight};
use crate::spectral::{SpectralGrid, Spectrum};
use crate::symtensor::{multi_indices, multiplicity, polarization_family, polarize, SymTensor};

/// Count vector `c` with `Theta_J = sum_j e_{i_j}`.
type Count = Vec<usize>;

fn count_vector(dim: usize, index: &[usize], subset: &[usize]) -> Count {
    let mut c = vec![0; dim];
    for &j in subset {
        c[index[j]] += 1;
    }
    c
}

fn unit(c: &[usize]) -> (Vec<f64>, f64) {
    let norm = c.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
    (c.iter().map(|&v| v as f64 / norm).collect(), norm)
}

/// Distinct normalized directions needed for order `m` in dimension `dim`:
/// all nonzero count vectors with `|c|_1 <= m` (just `e_1` for `m = 0`).
pub fn required_directions(dim: usize, m: usize) -> Vec<Vec<f64>> {
    if m == 0 {
        let mut e = vec![0.0; dim];
        e[0] = 1.0;
        return vec![e];
    }
    let family = polarization_family(m).expect("m >= 1");
    let mut counts: Vec<Count> = Vec::new();
    for idx in multi_indices(dim, m) {
        for term in &family.entries {
            counts.push(count_vector(dim, &idx, &term.subset));
        }
    }
    counts.sort();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for c in &counts {
        let d = unit(c).0;
        if !dirs.contains(&d) {
            dirs.push(d);
        }
    }
    dirs
}

/// Assembles the stored components from `<f, Theta^m>` values produced by `theta_value`.
fn assemble(dim: usize, m: usize, mut theta_value: impl FnMut(&Count) -> Result<f64>) -> Result<SymTensor> {
    if m == 0 {
        let mut e = vec![0; dim];
        e[0] = 1;
        return Ok(SymTensor::scalar(dim, theta_value(&e)?));
    }
    let family = polarization_family(m)?;
    let mut cache: HashMap<Count, f64> = HashMap::new();
    let mut out = Vec::new();
    for idx in multi_indices(dim, m) {
        let mut values = BTreeMap::new();
        for term in &family.entries {
            let c = count_vector(dim, &idx, &term.subset);
            let v = match cache.get(&c) {
                Some(&v) => v,
                None => {
                    let v = theta_value(&c)?;
                    cache.insert(c, v);
                    v
                }
            };
            values.insert(term.subset.clone(), v);
        }
        out.push(polarize(&values, &family)?);
    }
    SymTensor::from_components(dim, m, out)
}

/// A `D^{0,m}` oracle `(x, unit xi) -> value`.
pub type BeamOracle<'a> = dyn Fn(&[f64], &[f64]) -> Result<f64> + Sync + 'a;

const FD4: [(f64, f64); 4] = [
    (-2.0, 1.0 / 12.0),
    (-1.0, -8.0 / 12.0),
    (1.0, 8.0 / 12.0),
    (2.0, -1.0 / 12.0),
];

/// Pointwise recovery of `f(x)` from a `D^{0,m}` oracle `(x, unit xi) -> value`
/// using 4th-order central differences of step `h` along each axis.
pub fn reconstruct_pointwise(d0: &BeamOracle<'_>, x: &[f64], m: usize, h: f64) -> Result<SymTensor> {
    if !(h > 0.0) {
        return Err(invalid("h", "finite-difference step must be positive"));
    }
    let dim = x.len();
    assemble(dim, m, |c| {
        let (dir, norm) = unit(c);
        if m == 0 {
            // Theta = e_1: f(x) = -d_1 D^0(x, e_1)
            return Ok(-partial(d0, x, &dir, 0, h)?);
        }
        let mut sum = 0.0;
        for (r, &cr) in c.iter().enumerate().filter(|(_, &cr)| cr != 0) {
            sum += cr as f64 * norm.powi(m as i32 - 1) * partial(d0, x, &dir, r, h)?;
        }
        Ok(-sum)
    })
}

fn partial(d0: &BeamOracle<'_>, x: &[f64], dir: &[f64], axis: usize, h: f64) -> Result<f64> {
    let mut p = x.to_vec();
    let mut acc = 0.0;
    for &(o, w) in &FD4 {
        p[axis] = x[axis] + o * h;
        acc += w * d0(&p, dir)?;
    }
    Ok(acc / h)
}

fn find_direction(samples: &BeamSamples, dir: &[f64]) -> Option<usize> {
    samples
        .directions
        .directions
        .iter()
        .position(|d| d.iter().zip(dir).all(|(a, b)| (a - b).abs() < 1e-12))
}

/// Recovers the field on a source grid from `D^{k,m}` samples: `k`
/// momentum reductions, then the pointwise formula with grid differences.
/// The output grid is the input trimmed by `2(k+1)` nodes per side.
pub fn reconstruct_from_weighted(samples: &BeamSamples) -> Result<SymTensorField> {
    let k = match samples.weight {
        RayWeight::Moment(k) => k as usize,
        _ => return Err(invalid("weight", "needs integer-weight samples D^{k,m}")),
    };
    let grid = samples
        .source_grid
        .as_ref()
        .ok_or_else(|| invalid("samples", "needs samples on a source grid"))?;
    let trim = 2 * (k + 1);
    let required = 2 * trim + 1;
    if let Some(&available) = grid.sizes.iter().find(|&&s| s < required) {
        return Err(Error::GridExhausted { required, available });
    }
    let mut d0 = samples.clone();
    for _ in 0..k {
        d0 = momentum_reduce(&d0)?;
    }
    let m = samples.order;
    let dim = samples.dim;
    let dirs = required_directions(dim, m);
    let columns: Vec<usize> = dirs
        .iter()
        .map(|d| {
            find_direction(&d0, d).ok_or_else(|| invalid("directions", format!("missing required direction {d:?}")))
        })
        .collect::<Result<_>>()?;
    let src = d0.source_grid.clone().expect("reduction keeps the grid");
    let out_grid = src.trimmed(2)?;
    let nd = d0.directions.len();
    let tensors: Vec<SymTensor> = (0..out_grid.node_count())
        .into_par_iter()
        .map(|flat| {
            let idx: Vec<usize> = out_grid.multi_index(flat).iter().map(|i| i + 2).collect();
            let grad = |col: usize, axis: usize| -> f64 {
                let mut probe = idx.clone();
                let mut acc = 0.0;
                for &(o, w) in &FD4 {
                    probe[axis] = (idx[axis] as isize + o as isize) as usize;
                    acc += w * d0.values[src.flat_index(&probe) * nd + col];
                }
                acc / src.spacing[axis]
            };
            assemble(dim, m, |c| {
                let (dir, norm) = unit(c);
                let pos = dirs.iter().position(|d| d == &dir).expect("required direction");
                let col = columns[pos];
                if m == 0 {
                    return Ok(-grad(col, 0));
                }
                let sum: f64 = (0..dim)
                    .filter(|&r| c[r] > 0)
                    .map(|r| c[r] as f64 * norm.powi(m as i32 - 1) * grad(col, r))
                    .sum();
                Ok(-sum)
            })
        })
        .collect::<Result<_>>()?;
    let count = tensors.first().map_or(0, |t| t.components().len());
    let components = (0..count)
        .map(|c| tensors.iter().map(|t| t.components()[c]).collect())
        .collect();
    SymTensorField::new(out_grid, m, components)
}

fn riesz(z: &[f64], j: usize) -> Complex64 {
    let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, -z[j] / r)
    }
}

fn power(z: &[f64], e: f64) -> f64 {
    let r2: f64 = z.iter().map(|v| v * v).sum();
    if r2 == 0.0 {
        0.0
    } else {
        r2.powf(e / 2.0)
    }
}

/// `F f_i = |y|^{2s} [-2s F(R_i A^0) - F A^{1,i}]`.
pub fn vector_from_spectra(g: &SpectralGrid, a0: &Spectrum, a1: &[Spectrum], s: f64) -> Vec<Spectrum> {
    (0..g.dim())
        .map(|i| {
            let mut out = Spectrum::zeros(g.len());
            for k in 0..g.len() {
                let z = g.frequency(k);
                out.data[k] = power(z, 2.0 * s) * (-2.0 * s * riesz(z, i) * a0.data[k] - a1[i].data[k]);
            }
            out
        })
        .collect()
}

/// `F f_{i1 i2} = (1/2) |y|^{2s} [delta F A^0 - 2s F(R_i1 R_i2 A^0) - F A^{2,i1 i2}
/// - 2s (F(R_i1 A^{1,i2}) + F(R_i2 A^{1,i1}))]`.
pub fn tensor2_from_spectra(
    g: &SpectralGrid,
    a0: &Spectrum,
    a1: &[Spectrum],
    a2: &[Spectrum],
    s: f64,
) -> Vec<Spectrum> {
    let n = g.dim();
    multi_indices(n, 2)
        .iter()
        .enumerate()
        .map(|(p, idx)| {
            let (i1, i2) = (idx[0], idx[1]);
            let delta = if i1 == i2 { 1.0 } else { 0.0 };
            let mut out = Spectrum::zeros(g.len());
            for k in 0..g.len() {
                let z = g.frequency(k);
                let (r1, r2) = (riesz(z, i1), riesz(z, i2));
                let inner = delta * a0.data[k]
                    - 2.0 * s * r1 * r2 * a0.data[k]
                    - a2[p].data[k]
                    - 2.0 * s * (r1 * a1[i2].data[k] + r2 * a1[i1].data[k]);
                out.data[k] = 0.5 * power(z, 2.0 * s) * inner;
            }
            out
        })
        .collect()
}

fn check_avg(avg: &AverageField, m: usize) -> Result<()> {
    if !(avg.s > 0.0 && avg.s < 1.0) || avg.s == 0.5 {
        return Err(invalid("s", "requires s in (0, 1) without 1/2"));
    }
    if avg.m != m || avg.ranks.len() != m + 1 {
        return Err(Error::OrderMismatch {
            expected: m,
            found: avg.m,
        });
    }
    Ok(())
}

fn spectra_of(g: &SpectralGrid, f: &SymTensorField) -> Result<Vec<Spectrum>> {
    if !g.grid.same_geometry(&f.grid) {
        return Err(Error::Metadata("average grid differs from spectral grid".into()));
    }
    Ok(f.components.par_iter().map(|c| g.fft(c)).collect())
}

fn field_of(g: &SpectralGrid, order: usize, spectra: &[Spectrum]) -> Result<SymTensorField> {
    SymTensorField::new(g.grid.clone(), order, spectra.par_iter().map(|s| g.ifft(s)).collect())
}

/// Vector field from `A^0_{1,s}` and `A^1_{1,s}`; the zero mode is set to 0.
pub fn reconstruct_vector(g: &SpectralGrid, avg: &AverageField) -> Result<SymTensorField> {
    check_avg(avg, 1)?;
    let a0 = spectra_of(g, &avg.ranks[0])?;
    let a1 = spectra_of(g, &avg.ranks[1])?;
    field_of(g, 1, &vector_from_spectra(g, &a0[0], &a1, avg.s))
}

/// Symmetric 2-tensor field from `A^0`, `A^1`, `A^2`; the zero mode is set to 0.
pub fn reconstruct_2tensor(g: &SpectralGrid, avg: &AverageField) -> Result<SymTensorField> {
    check_avg(avg, 2)?;
    let a0 = spectra_of(g, &avg.ranks[0])?;
    let a1 = spectra_of(g, &avg.ranks[1])?;
    let a2 = spectra_of(g, &avg.ranks[2])?;
    field_of(g, 2, &tensor2_from_spectra(g, &a0[0], &a1, &a2, avg.s))
}

/// Error summary of a reconstruction against a reference on an interior mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconReport {
    pub method: String,
    pub order: usize,
    pub grid_sizes: Vec<usize>,
    /// Boundary ring excluded from the mask, in cells.
    pub ring: usize,
    pub mask_nodes: usize,
    pub relative_l2: Option<f64>,
    pub max_error: Option<Vec<f64>>,
    /// The constant Fourier mode was not recoverable and was set to 0.
    pub zero_mode_unrecoverable: bool,
    /// Mean of each reference component (lost content under the spectral routes).
    pub reference_means: Option<Vec<f64>>,
}

/// Default boundary ring of the interior mask.
pub const DEFAULT_RING: usize = 8;

/// Report without a reference.
pub fn report_without_reference(method: &str, recon: &SymTensorField, ring: usize, zero_mode: bool) -> ReconReport {
    ReconReport {
        method: method.to_string(),
        order: recon.order,
        grid_sizes: recon.grid.sizes.clone(),
        ring,
        mask_nodes: recon.grid.interior_mask(ring).iter().filter(|&&b| b).count(),
        relative_l2: None,
        max_error: None,
        zero_mode_unrecoverable: zero_mode,
        reference_means: None,
    }
}

/// Relative `L^2` error (all index tuples weighted) and per-component max
/// error on the nodes at least `ring` cells from the boundary.
pub fn compare_fields(
    method: &str,
    recon: &SymTensorField,
    reference: &SymTensorField,
    ring: usize,
    zero_mode: bool,
) -> Result<ReconReport> {
    if !recon.grid.same_geometry(&reference.grid) || recon.order != reference.order {
        return Err(Error::Metadata(
            "reconstruction and reference differ in grid or order".into(),
        ));
    }
    let mask = recon.grid.interior_mask(ring);
    let mut num = 0.0;
    let mut den = 0.0;
    let mut max_error = Vec::new();
    for ((idx, r), f) in recon
        .component_indices()
        .iter()
        .zip(&recon.components)
        .zip(&reference.components)
    {
        let mu = multiplicity(idx) as f64;
        let mut worst: f64 = 0.0;
        for ((a, b), &inside) in r.iter().zip(f).zip(&mask) {
            if inside {
                num += mu * (a - b) * (a - b);
                den += mu * b * b;
                worst = worst.max((a - b).abs());
            }
        }
        max_error.push(worst);
    }
    let means = reference
        .components
        .iter()
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    Ok(ReconReport {
        method: method.to_string(),
        order: recon.order,
        grid_sizes: recon.grid.sizes.clone(),
        ring,
        mask_nodes: mask.iter().filter(|&&b| b).count(),
        relative_l2: Some(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() }),
        max_error: Some(max_error),
        zero_mode_unrecoverable: zero_mode,
        reference_means: Some(means),
    })
}

/// Checks that a direction set contains every direction the pointwise
/// method needs.
pub fn missing_directions(dirs: &[Vec<f64>], dim: usize, m: usize) -> Vec<Vec<f64>> {
    required_directions(dim, m)
        .into_iter()
        .filter(|d| !dirs.iter().any(|e| e.iter().zip(d).all(|(a, b)| (a - b).abs() < 1e-12)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direction_sets() {
        assert_eq!(required_directions(2, 1).len(), 2);
        let d2 = required_directions(2, 2);
        assert_eq!(d2.len(), 3);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(d2.iter().any(|d| (d[0] - h).abs() < 1e-15 && (d[1] - h).abs() < 1e-15));
        // count vectors with |c|_1 <= 2 in 3D: 3 + 3 (c = 2 e_i is e_i again) -> 6 distinct
        assert_eq!(required_directions(3, 2).len(), 6);
    }

    #[test]
    fn zero_oracle_gives_zero_tensor() {
        let zero = |_: &[f64], _: &[f64]| -> Result<f64> { Ok(0.0) };
        for m in 0..3 {
            let t = reconstruct_pointwise(&zero, &[0.1, 0.2], m, 1.0 / 32.0).unwrap();
            assert_eq!(t.max_abs(), 0.0);
        }
    }
}
