//! Spherical averages of the fractional divergent beam transform.
//!
//! `A^{k, i_1..i_k}_{m,s} f(x) = c^{m,k}_{n,s} int_{S^{n-1}} xi^{i_1}..xi^{i_k}
//! chi_{s,m} f(x, xi) dS_xi` for `0 <= k <= m`. Three routes are provided:
//! sphere quadrature of beam samples, direct convolution with the kernel
//! `(-1)^{m+k} c |z|^{2s-n-m-k} z^I z^J` (an oracle for small grids), and
//! closed Fourier-multiplier formulas for `m = 1, 2`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, SymTensorField};
use crate::raytransform::{BeamSamples, RayWeight};
use crate::special::{gamma, sphere_monomial_moment};
use crate::spectral::{SpectralGrid, Spectrum};
use crate::symtensor::{component_position, multi_indices, multiplicity};

/// Largest grid axis accepted by the convolution oracle.
pub const CONVOLUTION_LIMIT: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Quadrature,
    Spectral,
    Convolution,
}

/// Averages `A^0, ..., A^m`; `ranks[k]` is a field of order `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageField {
    pub m: usize,
    pub s: f64,
    pub ranks: Vec<SymTensorField>,
    pub provenance: Provenance,
}

/// Alias kept for readability at call sites that handle one rank.
pub type RankAverage = SymTensorField;

impl AverageField {
    pub fn grid(&self) -> &Grid {
        &self.ranks[0].grid
    }

    pub fn rank(&self, k: usize) -> Result<&SymTensorField> {
        self.ranks.get(k).ok_or(Error::OrderMismatch {
            expected: k,
            found: self.ranks.len().saturating_sub(1),
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            ranks: self.ranks.iter().map(|r| r.scaled(factor)).collect(),
            ..self.clone()
        }
    }
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) || s == 0.5 {
        return Err(invalid("s", "requires s in (0, 1) without 1/2"));
    }
    Ok(())
}

/// `c^{m,k}_{n,s} = -Gamma((n+m+k-2s)/2) /
/// (2^{2s - floor((m+k)/2)} pi^{n/2} Gamma(s + ((m+k) mod 2)/2))`.
pub fn constant_c(n: usize, s: f64, m: usize, k: usize) -> Result<f64> {
    check_s(s)?;
    if k > m {
        return Err(invalid("k", "requires 0 <= k <= m"));
    }
    let p = m + k;
    let num = gamma((n as f64 + p as f64 - 2.0 * s) / 2.0)?;
    let den = 2f64.powf(2.0 * s - (p / 2) as f64)
        * std::f64::consts::PI.powf(n as f64 / 2.0)
        * gamma(s + (p % 2) as f64 / 2.0)?;
    Ok(-num / den)
}

fn average_s(beams: &BeamSamples) -> Result<f64> {
    match beams.weight {
        RayWeight::Fractional(s) => Ok(s),
        _ => Err(invalid("weight", "averages need fractional samples chi_{s,m}")),
    }
}

/// Rank-`k` average from beam samples of `chi_{s,m} f` on a weighted direction set.
pub fn average_by_quadrature(beams: &BeamSamples, k: usize) -> Result<RankAverage> {
    let s = average_s(beams)?;
    let m = beams.order;
    let c = constant_c(beams.dim, s, m, k)?;
    let weights = beams
        .directions
        .weights
        .as_ref()
        .ok_or_else(|| invalid("directions", "sphere quadrature weights are required"))?;
    if beams.dim == 2 && beams.directions.len() < 2 * m + 4 {
        return Err(Error::InsufficientDirections {
            required: 2 * m + 4,
            found: beams.directions.len(),
        });
    }
    let grid = beams
        .source_grid
        .clone()
        .ok_or_else(|| invalid("beams", "averages need samples on a source grid"))?;
    let nd = beams.directions.len();
    let indices = multi_indices(beams.dim, k);
    // per-index direction weights c * w_d * xi_d^I
    let table: Vec<Vec<f64>> = indices
        .iter()
        .map(|idx| {
            beams
                .directions
                .directions
                .iter()
                .zip(weights)
                .map(|(xi, w)| c * w * idx.iter().map(|&i| xi[i]).product::<f64>())
                .collect()
        })
        .collect();
    let components = table
        .iter()
        .map(|row| {
            (0..beams.sources.len())
                .map(|src| {
                    let vals = &beams.values[src * nd..(src + 1) * nd];
                    vals.iter().zip(row).map(|(v, w)| v * w).sum()
                })
                .collect()
        })
        .collect();
    SymTensorField::new(grid, k, components)
}

/// All ranks `0..=m` by sphere quadrature.
pub fn averages_by_quadrature(beams: &BeamSamples) -> Result<AverageField> {
    let s = average_s(beams)?;
    let ranks = (0..=beams.order)
        .map(|k| average_by_quadrature(beams, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(AverageField {
        m: beams.order,
        s,
        ranks,
        provenance: Provenance::Quadrature,
    })
}

/// Rank-`k` average by direct summation of the singular convolution kernel.
///
/// Near the target the integrand is regularized by subtracting
/// `phi(z) (f(x) - z . grad f(x))` with `phi = exp(-|z|^2 / sigma^2)`, whose
/// kernel moments are known in closed form; the lattice sum of the remainder
/// is then `O(h^{2s+2})`. Gradients use 4th-order differences (zero within two
/// nodes of the boundary, where admissible fields have decayed).
pub fn average_by_convolution(field: &SymTensorField, s: f64, k: usize) -> Result<RankAverage> {
    let grid = &field.grid;
    if let Some(&size) = grid.sizes.iter().find(|&&n| n > CONVOLUTION_LIMIT) {
        return Err(Error::GridTooLarge {
            size,
            limit: CONVOLUTION_LIMIT,
        });
    }
    let n = grid.dim();
    let m = field.order;
    let c = constant_c(n, s, m, k)?;
    let sign = if (m + k).is_multiple_of(2) { 1.0 } else { -1.0 };
    let beta = 2.0 * s - (n + m + k) as f64;
    let vol = grid.cell_volume();
    let sigma = 2.0 * grid.spacing.iter().cloned().fold(0.0, f64::max);
    let cutoff2 = (6.0 * sigma).powi(2);
    // int |z|^beta z^a phi(z) dz for |a| = m + k and m + k + 1
    let radial0 = sigma.powf(2.0 * s) * gamma(s)? / 2.0;
    let radial1 = sigma.powf(2.0 * s + 1.0) * gamma(s + 0.5)? / 2.0;
    let i_idx = multi_indices(n, k);
    let j_idx = multi_indices(n, m);
    let j_mult: Vec<f64> = j_idx.iter().map(|j| multiplicity(j) as f64).collect();
    let exps = |i: &[usize], j: &[usize], extra: Option<usize>| {
        let mut e = vec![0usize; n];
        for &a in i.iter().chain(j).chain(extra.iter()) {
            e[a] += 1;
        }
        e
    };
    let moment0: Vec<Vec<f64>> = i_idx
        .iter()
        .map(|i| {
            j_idx
                .iter()
                .map(|j| radial0 * sphere_monomial_moment(&exps(i, j, None)))
                .collect()
        })
        .collect();
    let moment1: Vec<Vec<Vec<f64>>> = i_idx
        .iter()
        .map(|i| {
            j_idx
                .iter()
                .map(|j| {
                    (0..n)
                        .map(|b| radial1 * sphere_monomial_moment(&exps(i, j, Some(b))))
                        .collect()
                })
                .collect()
        })
        .collect();
    let gradients: Vec<Vec<Vec<f64>>> = field.components.iter().map(|f| fd_gradient(grid, f)).collect();
    let nodes = grid.node_count();
    let points = grid.points();
    let values: Vec<Vec<f64>> = (0..nodes)
        .into_par_iter()
        .map(|target| {
            let x = &points[target];
            let fx: Vec<f64> = field.components.iter().map(|f| f[target]).collect();
            let gx: Vec<Vec<f64>> = gradients
                .iter()
                .map(|g| g.iter().map(|d| d[target]).collect())
                .collect();
            let mut acc: Vec<f64> = (0..i_idx.len())
                .map(|ii| {
                    (0..j_idx.len())
                        .map(|jj| {
                            let lin: f64 = (0..n).map(|b| moment1[ii][jj][b] * gx[jj][b]).sum();
                            j_mult[jj] * (moment0[ii][jj] * fx[jj] - lin)
                        })
                        .sum()
                })
                .collect();
            let mut z = vec![0.0; n];
            for (src, y) in points.iter().enumerate() {
                if src == target {
                    continue;
                }
                for ((zi, xi), yi) in z.iter_mut().zip(x).zip(y) {
                    *zi = xi - yi;
                }
                let r2: f64 = z.iter().map(|v| v * v).sum();
                let phi = if r2 < cutoff2 {
                    (-r2 / (sigma * sigma)).exp()
                } else {
                    0.0
                };
                let fj: f64 = j_idx
                    .iter()
                    .enumerate()
                    .map(|(jj, j)| {
                        let mut v = field.components[jj][src];
                        if phi > 0.0 {
                            let dz: f64 = z.iter().zip(&gx[jj]).map(|(a, b)| a * b).sum();
                            v -= phi * (fx[jj] - dz);
                        }
                        j_mult[jj] * v * j.iter().map(|&a| z[a]).product::<f64>()
                    })
                    .sum();
                if fj == 0.0 {
                    continue;
                }
                let radial = r2.powf(beta / 2.0) * vol;
                for (a, i) in acc.iter_mut().zip(&i_idx) {
                    *a += radial * fj * i.iter().map(|&b| z[b]).product::<f64>();
                }
            }
            acc.iter().map(|a| sign * c * a).collect()
        })
        .collect();
    let components = (0..i_idx.len())
        .map(|ci| values.iter().map(|v| v[ci]).collect())
        .collect();
    SymTensorField::new(grid.clone(), k, components)
}

/// 4th-order central differences along each axis; zero near the boundary.
fn fd_gradient(grid: &Grid, f: &[f64]) -> Vec<Vec<f64>> {
    const W: [(isize, f64); 4] = [(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];
    (0..grid.dim())
        .map(|axis| {
            (0..grid.node_count())
                .map(|flat| {
                    let mut idx = grid.multi_index(flat);
                    let i = idx[axis] as isize;
                    if i < 2 || i + 2 >= grid.sizes[axis] as isize {
                        return 0.0;
                    }
                    let mut acc = 0.0;
                    for &(o, w) in &W {
                        idx[axis] = (i + o) as usize;
                        acc += w * f[grid.flat_index(&idx)];
                    }
                    acc / grid.spacing[axis]
                })
                .collect()
        })
        .collect()
}

fn spectra(g: &SpectralGrid, f: &SymTensorField) -> Vec<Spectrum> {
    f.components.par_iter().map(|c| g.fft(c)).collect()
}

fn to_field(g: &SpectralGrid, order: usize, spectra: &[Spectrum]) -> Result<SymTensorField> {
    let comps = spectra.par_iter().map(|s| g.ifft(s)).collect();
    SymTensorField::new(g.grid.clone(), order, comps)
}

fn riesz_symbol(z: &[f64], j: usize) -> Complex64 {
    let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, -z[j] / r)
    }
}

fn inv_power(z: &[f64], e: f64) -> f64 {
    let r2: f64 = z.iter().map(|v| v * v).sum();
    if r2 == 0.0 {
        0.0
    } else {
        r2.powf(-e / 2.0)
    }
}

fn check_spectral_input(g: &SpectralGrid, f: &SymTensorField, m: usize, s: f64) -> Result<()> {
    check_s(s)?;
    if f.order != m {
        return Err(Error::OrderMismatch {
            expected: m,
            found: f.order,
        });
    }
    if !g.grid.same_geometry(&f.grid) {
        return Err(Error::Metadata("field grid differs from spectral grid".into()));
    }
    Ok(())
}

/// Scalar average `A^0_{0,s} f = -I^{2s} f`, i.e. `F A^0 = -|y|^{-2s} F f`.
pub fn average_spectral_scalar(g: &SpectralGrid, f: &SymTensorField, s: f64) -> Result<AverageField> {
    check_spectral_input(g, f, 0, s)?;
    let fh = g.fft(&f.components[0]).map(g, |z, v| -inv_power(z, 2.0 * s) * v);
    Ok(AverageField {
        m: 0,
        s,
        ranks: vec![to_field(g, 0, &[fh])?],
        provenance: Provenance::Spectral,
    })
}

/// Spectral averages for `m <= 2`.
pub fn average_spectral(g: &SpectralGrid, f: &SymTensorField, s: f64) -> Result<AverageField> {
    match f.order {
        0 => average_spectral_scalar(g, f, s),
        1 => average_spectral_vector(g, f, s),
        2 => average_spectral_2tensor(g, f, s),
        _ => Err(Error::UnsupportedKind("spectral averages exist for m <= 2")),
    }
}

/// Spectra of `A^0` and `A^{1,i}` for a vector field:
/// `F A^0 = |y|^{-2s} F(R_j f_j)`, `F A^{1,i} = -|y|^{-2s} F f_i - 2s F(R_i A^0)`.
pub fn vector_average_spectra(g: &SpectralGrid, fh: &[Spectrum], s: f64) -> (Spectrum, Vec<Spectrum>) {
    let n = g.dim();
    let len = g.len();
    let mut a0 = Spectrum::zeros(len);
    let mut a1 = vec![Spectrum::zeros(len); n];
    for k in 0..len {
        let z = g.frequency(k);
        let w = inv_power(z, 2.0 * s);
        let v0: Complex64 = (0..n).map(|j| riesz_symbol(z, j) * fh[j].data[k]).sum::<Complex64>() * w;
        a0.data[k] = v0;
        for (i, a) in a1.iter_mut().enumerate() {
            a.data[k] = -w * fh[i].data[k] - 2.0 * s * riesz_symbol(z, i) * v0;
        }
    }
    (a0, a1)
}

/// Averages of a vector field through the multiplier formulas.
pub fn average_spectral_vector(g: &SpectralGrid, f: &SymTensorField, s: f64) -> Result<AverageField> {
    check_spectral_input(g, f, 1, s)?;
    let fh = spectra(g, f);
    let (a0, a1) = vector_average_spectra(g, &fh, s);
    Ok(AverageField {
        m: 1,
        s,
        ranks: vec![to_field(g, 0, &[a0])?, to_field(g, 1, &a1)?],
        provenance: Provenance::Spectral,
    })
}

/// Spectra of `A^0`, `A^{1,i}`, `A^{2,i1 i2}` for a symmetric 2-tensor field.
pub fn tensor2_average_spectra(g: &SpectralGrid, fh: &[Spectrum], s: f64) -> (Spectrum, Vec<Spectrum>, Vec<Spectrum>) {
    let n = g.dim();
    let len = g.len();
    let pairs = multi_indices(n, 2);
    let pos = |a: usize, b: usize| component_position(n, &[a, b]);
    let mut a0 = Spectrum::zeros(len);
    let mut a1 = vec![Spectrum::zeros(len); n];
    let mut a2 = vec![Spectrum::zeros(len); pairs.len()];
    let mut r = vec![Complex64::new(0.0, 0.0); n];
    let mut v1 = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..len {
        let z = g.frequency(k);
        let w = inv_power(z, 2.0 * s);
        for (j, rj) in r.iter_mut().enumerate() {
            *rj = riesz_symbol(z, j);
        }
        let f = |a: usize, b: usize| fh[pos(a, b)].data[k];
        let trace: Complex64 = (0..n).map(|j| f(j, j)).sum();
        // sum_{j1 j2} R_j1 R_j2 f_j1j2
        let rrf: Complex64 = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .map(|(a, b)| r[a] * r[b] * f(a, b))
            .sum();
        let v0 = -w * (trace + 2.0 * s * rrf);
        a0.data[k] = v0;
        for i in 0..n {
            let rf: Complex64 = (0..n).map(|j| r[j] * f(j, i)).sum();
            v1[i] = -r[i] * v0 + w * (2.0 * rf + r[i] * rrf);
            a1[i].data[k] = v1[i];
        }
        for (p, idx) in pairs.iter().enumerate() {
            let (i1, i2) = (idx[0], idx[1]);
            let delta = if i1 == i2 { 1.0 } else { 0.0 };
            a2[p].data[k] = -2.0 * w * f(i1, i2) + delta * v0
                - 2.0 * s * r[i1] * r[i2] * v0
                - 2.0 * s * (r[i1] * v1[i2] + r[i2] * v1[i1]);
        }
    }
    (a0, a1, a2)
}

/// Averages of a symmetric 2-tensor field through the multiplier formulas.
pub fn average_spectral_2tensor(g: &SpectralGrid, f: &SymTensorField, s: f64) -> Result<AverageField> {
    check_spectral_input(g, f, 2, s)?;
    let fh = spectra(g, f);
    let (a0, a1, a2) = tensor2_average_spectra(g, &fh, s);
    Ok(AverageField {
        m: 2,
        s,
        ranks: vec![to_field(g, 0, &[a0])?, to_field(g, 1, &a1)?, to_field(g, 2, &a2)?],
        provenance: Provenance::Spectral,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::riesz_constant;

    #[test]
    fn constant_examples() {
        let c = constant_c(2, 0.25, 1, 0).unwrap();
        let expected = -statrs::function::gamma::gamma(1.25)
            / (2f64.sqrt() * std::f64::consts::PI * statrs::function::gamma::gamma(0.75));
        assert!((c - expected).abs() < 1e-14);
        assert!((c + 0.16649).abs() < 1e-4);
        for s in [0.1, 0.3, 0.45] {
            assert!(constant_c(2, s, 1, 1).unwrap() < 0.0);
        }
        assert!(constant_c(2, 0.5, 1, 0).is_err());
        assert!(constant_c(2, 0.25, 1, 2).is_err());
    }

    #[test]
    fn scalar_constant_is_riesz_normalization_up_to_sign() {
        for &(n, s) in &[(2usize, 0.25), (2, 0.75), (3, 0.25), (3, 0.6), (4, 0.9)] {
            let c = constant_c(n, s, 0, 0).unwrap();
            let h = riesz_constant(n, 2.0 * s).unwrap();
            assert!((c + h).abs() < 1e-12 * h.abs());
        }
    }

    #[test]
    fn convolution_rejects_large_grids() {
        let g = Grid::cube(2, 128, 8.0).unwrap();
        let f = SymTensorField::zeros(g, 0);
        assert!(matches!(
            average_by_convolution(&f, 0.25, 0),
            Err(Error::GridTooLarge { size: 128, .. })
        ));
    }
}
