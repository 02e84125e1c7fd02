//! FFT engine for Fourier multipliers on a periodized grid.
//!
//! A real grid function `u` on `N_1 x ... x N_n` nodes with spacing `h` is
//! transformed by the unnormalized DFT; lattice frequencies are
//! `zeta_j = 2 pi k_j / L_j` with `k_j` in fftfreq order (the Nyquist index
//! is negative). A multiplier `sigma(zeta)` acts as
//! `u -> Re IDFT(sigma * DFT(u))`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, SymTensorField};
use crate::symtensor::multiplicity;

/// Treatment of the zero frequency under multipliers singular at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroModePolicy {
    /// The zero mode is mapped to zero.
    #[default]
    Zero,
    /// Inputs with nonzero mean are rejected.
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

type Symbol = dyn Fn(&[f64]) -> Complex64 + Send + Sync;

/// A Fourier multiplier `sigma(zeta)`.
#[derive(Clone)]
pub struct MultiplierOp {
    symbol: Arc<Symbol>,
    /// Growth exponent of the symbol at infinity.
    pub order: f64,
    /// The symbol is unbounded at `zeta = 0`; the zero mode is set to 0.
    pub singular_at_zero: bool,
    pub label: String,
}

impl std::fmt::Debug for MultiplierOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MultiplierOp")
            .field("label", &self.label)
            .field("order", &self.order)
            .field("singular_at_zero", &self.singular_at_zero)
            .finish()
    }
}

fn norm(zeta: &[f64]) -> f64 {
    zeta.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl MultiplierOp {
    pub fn new(
        label: impl Into<String>,
        order: f64,
        singular_at_zero: bool,
        symbol: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            symbol: Arc::new(symbol),
            order,
            singular_at_zero,
            label: label.into(),
        }
    }

    pub fn identity() -> Self {
        Self::new("id", 0.0, false, |_| Complex64::new(1.0, 0.0))
    }

    /// Riesz transform `R_j`: `-i zeta_j / |zeta|`, zero at the origin.
    pub fn riesz(j: usize) -> Self {
        Self::new(format!("R_{j}"), 0.0, false, move |z| {
            let r = norm(z);
            if r == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -z[j] / r)
            }
        })
    }

    /// `(-Delta)^{+-s}`: `|zeta|^{+-2s}`.
    pub fn frac_laplacian(s: f64, sign: Sign) -> Self {
        let e = match sign {
            Sign::Plus => 2.0 * s,
            Sign::Minus => -2.0 * s,
        };
        Self::power(e)
    }

    /// Riesz potential `I^gamma`: `|zeta|^{-gamma}`.
    pub fn riesz_potential(gamma: f64) -> Self {
        Self::power(-gamma)
    }

    /// `|zeta|^e`, with the zero mode set to 0.
    pub fn power(e: f64) -> Self {
        Self::new(format!("|z|^{e}"), e, e < 0.0, move |z| {
            let r = norm(z);
            if r == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(r.powf(e), 0.0)
            }
        })
    }

    /// Partial derivative `d_j`: `i zeta_j`.
    pub fn derivative(j: usize) -> Self {
        Self::new(format!("d_{j}"), 1.0, false, move |z| Complex64::new(0.0, z[j]))
    }

    /// Bessel potential `<D>^s`: `(1 + |zeta|^2)^{s/2}`.
    pub fn bessel(s: f64) -> Self {
        Self::new(format!("<D>^{s}"), s, false, move |z| {
            let r2: f64 = z.iter().map(|v| v * v).sum();
            Complex64::new((1.0 + r2).powf(s / 2.0), 0.0)
        })
    }

    pub fn eval(&self, zeta: &[f64]) -> Complex64 {
        (self.symbol)(zeta)
    }

    /// Product symbol `self * other`.
    pub fn then(&self, other: &MultiplierOp) -> Self {
        let (a, b) = (self.symbol.clone(), other.symbol.clone());
        Self {
            symbol: Arc::new(move |z| a(z) * b(z)),
            order: self.order + other.order,
            singular_at_zero: self.singular_at_zero || other.singular_at_zero,
            label: format!("{} {}", other.label, self.label),
        }
    }
}

/// DFT coefficients of a grid function (unnormalized, fftfreq order).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub data: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(len: usize) -> Self {
        Self {
            data: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// Pointwise `sigma(zeta) * self`.
    pub fn apply(&self, grid: &SpectralGrid, op: &MultiplierOp) -> Spectrum {
        self.map(grid, |z, v| op.eval(z) * v)
    }

    pub fn map(&self, grid: &SpectralGrid, f: impl Fn(&[f64], Complex64) -> Complex64 + Sync) -> Spectrum {
        let n = grid.dim();
        let data = self
            .data
            .par_iter()
            .enumerate()
            .map(|(k, &v)| f(&grid.zeta[k * n..(k + 1) * n], v))
            .collect();
        Spectrum { data }
    }

    pub fn add_scaled(&mut self, factor: Complex64, other: &Spectrum) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }
}

/// Grid plus FFT plans and the frequency lattice.
#[derive(Clone)]
pub struct SpectralGrid {
    pub grid: Grid,
    pub policy: ZeroModePolicy,
    /// Flat `node_count x dim` lattice frequencies.
    zeta: Vec<f64>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("grid", &self.grid)
            .field("policy", &self.policy)
            .finish()
    }
}

/// Signed fftfreq index of position `i` on an axis of `n` nodes.
pub fn fft_index(i: usize, n: usize) -> i64 {
    if i < n.div_ceil(2) {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl SpectralGrid {
    pub fn new(grid: Grid, policy: ZeroModePolicy) -> Result<Self> {
        if let Some(&bad) = grid.sizes.iter().find(|s| !s.is_power_of_two() || **s < 2) {
            return Err(invalid("sizes", format!("{bad} is not a power of two >= 2")));
        }
        let mut planner = FftPlanner::new();
        let forward = grid.sizes.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = grid.sizes.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let lengths = grid.lengths();
        let n = grid.dim();
        let mut zeta = Vec::with_capacity(grid.node_count() * n);
        for flat in 0..grid.node_count() {
            for (axis, &i) in grid.multi_index(flat).iter().enumerate() {
                let k = fft_index(i, grid.sizes[axis]);
                zeta.push(2.0 * std::f64::consts::PI * k as f64 / lengths[axis]);
            }
        }
        Ok(Self {
            grid,
            policy,
            zeta,
            forward,
            inverse,
        })
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn len(&self) -> usize {
        self.grid.node_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lattice frequency of flat index `k`.
    pub fn frequency(&self, k: usize) -> &[f64] {
        let n = self.dim();
        &self.zeta[k * n..(k + 1) * n]
    }

    /// Frequency of the half-Nyquist bound `pi / (2 h)` on each axis.
    pub fn half_nyquist(&self) -> Vec<f64> {
        self.grid
            .spacing
            .iter()
            .map(|h| std::f64::consts::PI / (2.0 * h))
            .collect()
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        let sizes = &self.grid.sizes;
        let total = data.len();
        for (axis, plan) in plans.iter().enumerate() {
            let len = sizes[axis];
            let stride: usize = sizes[axis + 1..].iter().product();
            let mut line = vec![Complex64::new(0.0, 0.0); len];
            let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            let blocks = total / (len * stride);
            for block in 0..blocks {
                for inner in 0..stride {
                    let base = block * len * stride + inner;
                    for (i, l) in line.iter_mut().enumerate() {
                        *l = data[base + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, l) in line.iter().enumerate() {
                        data[base + i * stride] = *l;
                    }
                }
            }
        }
    }

    pub fn fft(&self, u: &[f64]) -> Spectrum {
        let mut data: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        Spectrum { data }
    }

    /// Inverse DFT keeping the real part.
    pub fn ifft(&self, s: &Spectrum) -> Vec<f64> {
        let mut data = s.data.clone();
        self.transform(&mut data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        data.iter().map(|v| v.re * scale).collect()
    }

    /// Inverse DFT of complex spectra (full complex output).
    pub fn ifft_complex(&self, s: &Spectrum) -> Vec<Complex64> {
        let mut data = s.data.clone();
        self.transform(&mut data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        data.iter().map(|v| v * scale).collect()
    }

    fn check_mean(&self, u: &[f64]) -> Result<()> {
        if self.policy == ZeroModePolicy::Error {
            let peak = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let mean = u.iter().sum::<f64>() / u.len() as f64;
            if mean.abs() > 1e-12 * peak.max(f64::MIN_POSITIVE) {
                return Err(Error::NonzeroMean { mean });
            }
        }
        Ok(())
    }

    /// Applies a multiplier to a real grid function.
    pub fn apply(&self, op: &MultiplierOp, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: u.len(),
            });
        }
        if op.singular_at_zero {
            self.check_mean(u)?;
        }
        Ok(self.ifft(&self.fft(u).apply(self, op)))
    }

    /// Applies a multiplier to every stored component of a field.
    pub fn apply_field(&self, op: &MultiplierOp, f: &SymTensorField) -> Result<SymTensorField> {
        let components = f
            .components
            .par_iter()
            .map(|c| self.apply(op, c))
            .collect::<Result<Vec<_>>>()?;
        SymTensorField::new(f.grid.clone(), f.order, components)
    }

    /// Continuum transform `int e^{-i<x,y>} u dx` at the lattice frequencies,
    /// approximated by the Riemann sum over the grid.
    pub fn continuum_transform(&self, u: &[f64]) -> Vec<Complex64> {
        let s = self.fft(u);
        let vol = self.grid.cell_volume();
        s.data
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let phase: f64 = self
                    .frequency(k)
                    .iter()
                    .zip(&self.grid.origin)
                    .map(|(z, o)| z * o)
                    .sum();
                v * Complex64::from_polar(vol, -phase)
            })
            .collect()
    }

    /// `||<D>^t u||_{L^p}` with cell-volume weights.
    pub fn sobolev_norm(&self, u: &[f64], t: f64, p: f64) -> Result<f64> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(invalid("p", "need 1 <= p < inf"));
        }
        let v = if t == 0.0 {
            u.to_vec()
        } else {
            self.apply(&MultiplierOp::bessel(t), u)?
        };
        Ok(lp_norm(&v, p, self.grid.cell_volume()))
    }

    /// `H^{t,2}` norm via Plancherel on the lattice.
    pub fn sobolev_norm_plancherel(&self, u: &[f64], t: f64) -> f64 {
        let s = self.fft(u);
        let sum: f64 = s
            .data
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let r2: f64 = self.frequency(k).iter().map(|z| z * z).sum();
                (1.0 + r2).powf(t) * v.norm_sqr()
            })
            .sum();
        (sum * self.grid.cell_volume() / self.len() as f64).sqrt()
    }

    /// Tensor-field norm: component norms summed over all `n^m` index tuples.
    pub fn tensor_norm(&self, f: &SymTensorField, t: f64, p: f64) -> Result<f64> {
        f.component_indices()
            .iter()
            .zip(&f.components)
            .map(|(idx, c)| Ok(multiplicity(idx) as f64 * self.sobolev_norm(c, t, p)?))
            .sum()
    }
}

/// Discrete `L^p` norm `(sum |v|^p dV)^{1/p}`.
pub fn lp_norm(v: &[f64], p: f64, cell_volume: f64) -> f64 {
    if p == 2.0 {
        (v.iter().map(|x| x * x).sum::<f64>() * cell_volume).sqrt()
    } else {
        (v.iter().map(|x| x.abs().powf(p)).sum::<f64>() * cell_volume).powf(1.0 / p)
    }
}

/// Rejects fields whose outer ring exceeds `tol` times their peak.
pub fn check_boundary_decay(f: &SymTensorField, tol: f64) -> Result<()> {
    let mask = f.grid.interior_mask(1);
    let mut boundary: f64 = 0.0;
    for c in &f.components {
        for (v, inside) in c.iter().zip(&mask) {
            if !inside {
                boundary = boundary.max(v.abs());
            }
        }
    }
    let peak = f.max_abs();
    if boundary > tol * peak {
        return Err(Error::NoBoundaryDecay { boundary, peak });
    }
    Ok(())
}

pub fn riesz_transform(g: &SpectralGrid, u: &[f64], axis: usize) -> Result<Vec<f64>> {
    g.apply(&MultiplierOp::riesz(axis), u)
}

pub fn frac_laplacian(g: &SpectralGrid, u: &[f64], s: f64, sign: Sign) -> Result<Vec<f64>> {
    if !(s > 0.0) {
        return Err(invalid("s", "must be positive"));
    }
    g.apply(&MultiplierOp::frac_laplacian(s, sign), u)
}

pub fn riesz_potential(g: &SpectralGrid, u: &[f64], gamma: f64) -> Result<Vec<f64>> {
    let r = (gamma - g.dim() as f64) / 2.0;
    if r == r.round() {
        return Err(invalid("gamma", "gamma - n must not be an even integer"));
    }
    g.apply(&MultiplierOp::riesz_potential(gamma), u)
}

pub fn bessel_apply(g: &SpectralGrid, u: &[f64], s: f64) -> Result<Vec<f64>> {
    g.apply(&MultiplierOp::bessel(s), u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize, l: f64) -> SpectralGrid {
        SpectralGrid::new(Grid::cube(2, n, l).unwrap(), ZeroModePolicy::Zero).unwrap()
    }

    fn sine(g: &SpectralGrid) -> Vec<f64> {
        let l = g.grid.lengths()[0];
        g.grid.points().iter().map(|p| (2.0 * PI * p[0] / l).sin()).collect()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn fft_roundtrip() {
        let g = grid(16, 4.0);
        let u: Vec<f64> = (0..256).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let back = g.ifft(&g.fft(&u));
        assert!(max_diff(&u, &back) < 1e-12 * 5.0);
    }

    #[test]
    fn single_mode_multipliers() {
        let g = grid(32, 6.0);
        let u = sine(&g);
        let l = 6.0;
        let cos: Vec<f64> = g.grid.points().iter().map(|p| (2.0 * PI * p[0] / l).cos()).collect();
        let r = riesz_transform(&g, &u, 0).unwrap();
        let minus_cos: Vec<f64> = cos.iter().map(|c| -c).collect();
        assert!(max_diff(&r, &minus_cos) < 1e-12);
        let half = frac_laplacian(&g, &u, 0.5, Sign::Plus).unwrap();
        let expected: Vec<f64> = u.iter().map(|v| 2.0 * PI / l * v).collect();
        assert!(max_diff(&half, &expected) < 1e-12);
        let norm = g.sobolev_norm(&u, 1.0, 2.0).unwrap();
        let closed = ((1.0 + (2.0 * PI / l).powi(2)) * l * l / 2.0).sqrt();
        assert!((norm - closed).abs() < 1e-10 * closed);
        assert!((g.sobolev_norm_plancherel(&u, 1.0) - closed).abs() < 1e-10 * closed);
    }

    #[test]
    fn constants_and_policies() {
        let g = grid(8, 2.0);
        let ones = vec![1.0; 64];
        assert!(riesz_transform(&g, &ones, 1).unwrap().iter().all(|v| v.abs() < 1e-15));
        let strict = SpectralGrid::new(g.grid.clone(), ZeroModePolicy::Error).unwrap();
        assert!(matches!(
            frac_laplacian(&strict, &ones, 0.3, Sign::Minus),
            Err(Error::NonzeroMean { .. })
        ));
        assert!(frac_laplacian(&strict, &ones, 0.3, Sign::Plus).is_ok());
        assert!(SpectralGrid::new(Grid::cube(2, 12, 1.0).unwrap(), ZeroModePolicy::Zero).is_err());
        assert!(riesz_potential(&g, &ones, 2.0).is_err());
    }

    #[test]
    fn boundary_preflight() {
        let gr = Grid::cube(2, 16, 4.0).unwrap();
        let flat = SymTensorField::new(gr.clone(), 0, vec![vec![1.0; 256]]).unwrap();
        assert!(matches!(
            check_boundary_decay(&flat, 1e-12),
            Err(Error::NoBoundaryDecay { .. })
        ));
        let mut bump = vec![0.0; 256];
        bump[8 * 16 + 8] = 1.0;
        let ok = SymTensorField::new(gr, 0, vec![bump]).unwrap();
        assert!(check_boundary_decay(&ok, 1e-12).is_ok());
    }
}
