//! Analytic test fields.
//!
//! Gaussian families are Schwartz-class with closed-form Fourier transforms.
//! The potential bump is compactly supported: order 0 gives the bump `v`
//! itself and order 1 its gradient `dv`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{FieldEval, Grid, SymTensorField};
use crate::symtensor::{component_count, component_position, multi_indices, multiplicity, SymTensor};

/// One polynomial term `coefficient * (x - c)^exponents * exp(-a |x - c|^2)`
/// of a single stored component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    /// Index tuple of the component the term contributes to.
    pub component: Vec<usize>,
    /// Per-axis exponents of `(x - c)`.
    pub exponents: Vec<u32>,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PhantomKind {
    /// Constant stored components times a Gaussian.
    GaussianTensor {
        coefficients: Vec<f64>,
    },
    PolynomialGaussianTensor {
        terms: Vec<PolyTerm>,
    },
    /// `v(x) = A exp(-1 / (1 - |x-c|^2 / r^2))` inside the ball `B(c, r)`.
    PotentialBump {
        radius: f64,
        amplitude: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub order: usize,
    pub dim: usize,
    pub center: Vec<f64>,
    /// Gaussian exponent `a` in `exp(-a |x-c|^2)`; unused by the bump.
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(flatten)]
    pub kind: PhantomKind,
}

const GAUSSIAN_CUTOFF: f64 = 50.0;

fn default_width() -> f64 {
    1.0
}

impl PhantomSpec {
    pub fn gaussian(dim: usize, order: usize, center: Vec<f64>, width: f64, coefficients: Vec<f64>) -> Self {
        Self {
            order,
            dim,
            center,
            width,
            kind: PhantomKind::GaussianTensor { coefficients },
        }
    }

    pub fn polynomial_gaussian(dim: usize, order: usize, center: Vec<f64>, width: f64, terms: Vec<PolyTerm>) -> Self {
        Self {
            order,
            dim,
            center,
            width,
            kind: PhantomKind::PolynomialGaussianTensor { terms },
        }
    }

    pub fn potential_bump(dim: usize, order: usize, center: Vec<f64>, radius: f64, amplitude: f64) -> Self {
        Self {
            order,
            dim,
            center,
            width: 1.0,
            kind: PhantomKind::PotentialBump { radius, amplitude },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=8).contains(&self.dim) {
            return Err(invalid("dim", "must lie in 1..=8"));
        }
        if self.center.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: self.center.len(),
            });
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(invalid("width", "must be positive"));
        }
        match &self.kind {
            PhantomKind::GaussianTensor { coefficients } => {
                let expected = component_count(self.dim, self.order);
                if coefficients.len() != expected {
                    return Err(Error::DimensionMismatch {
                        expected,
                        found: coefficients.len(),
                    });
                }
            }
            PhantomKind::PolynomialGaussianTensor { terms } => {
                for term in terms {
                    if term.component.len() != self.order {
                        return Err(Error::OrderMismatch {
                            expected: self.order,
                            found: term.component.len(),
                        });
                    }
                    if term.exponents.len() != self.dim {
                        return Err(Error::DimensionMismatch {
                            expected: self.dim,
                            found: term.exponents.len(),
                        });
                    }
                    if term.component.iter().any(|&i| i >= self.dim) {
                        return Err(invalid("component", "index out of range"));
                    }
                }
            }
            PhantomKind::PotentialBump { radius, .. } => {
                if self.order > 1 {
                    return Err(invalid("order", "potential-bump supports order 0 (v) or 1 (dv)"));
                }
                if !(*radius > 0.0) {
                    return Err(invalid("radius", "must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Multiplies the phantom by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        match &mut out.kind {
            PhantomKind::GaussianTensor { coefficients } => coefficients.iter_mut().for_each(|c| *c *= factor),
            PhantomKind::PolynomialGaussianTensor { terms } => terms.iter_mut().for_each(|t| t.coefficient *= factor),
            PhantomKind::PotentialBump { amplitude, .. } => *amplitude *= factor,
        }
        out
    }

    /// The same phantom with its center moved by `shift`.
    pub fn shifted(&self, shift: &[f64]) -> Self {
        let mut out = self.clone();
        out.center.iter_mut().zip(shift).for_each(|(c, s)| *c += s);
        out
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            PhantomKind::GaussianTensor { .. } => "gaussian-tensor",
            PhantomKind::PolynomialGaussianTensor { .. } => "polynomial-gaussian-tensor",
            PhantomKind::PotentialBump { .. } => "potential-bump",
        }
    }

    /// Bump potential `v(x)`; zero for the Gaussian kinds.
    pub fn potential(&self, x: &[f64]) -> f64 {
        match self.kind {
            PhantomKind::PotentialBump { radius, amplitude } => {
                let rho2 = dist2(x, &self.center) / (radius * radius);
                if rho2 >= 1.0 {
                    0.0
                } else {
                    amplitude * (-1.0 / (1.0 - rho2)).exp()
                }
            }
            _ => 0.0,
        }
    }

    /// Closed-form Fourier transform `int e^{-i<x,y>} f(x) dx` of each stored component.
    pub fn eval_fourier(&self, y: &[f64]) -> Result<Vec<Complex64>> {
        let a = self.width;
        let count = component_count(self.dim, self.order);
        // (pi/a)^{n/2} prod_j exp(-y_j^2/(4a)), shifted by exp(-i<c,y>)
        let base = (std::f64::consts::PI / a).powf(self.dim as f64 / 2.0) * (-norm2(y) / (4.0 * a)).exp();
        let phase = Complex64::from_polar(1.0, -dot(&self.center, y));
        match &self.kind {
            PhantomKind::GaussianTensor { coefficients } => {
                Ok(coefficients.iter().map(|&c| phase * (c * base)).collect())
            }
            PhantomKind::PolynomialGaussianTensor { terms } => {
                let mut out = vec![Complex64::new(0.0, 0.0); count];
                let scale = 1.0 / (2.0 * a.sqrt());
                for term in terms {
                    // F(x^b g) = i^{|b|} D^b F(g); D^k e^{-u^2} = (-1)^k H_k(u) e^{-u^2}
                    let mut factor = Complex64::new(term.coefficient * base, 0.0);
                    for (axis, &k) in term.exponents.iter().enumerate() {
                        let u = y[axis] * scale;
                        let deriv = if k % 2 == 0 { 1.0 } else { -1.0 } * scale.powi(k as i32) * hermite(k, u);
                        factor *= Complex64::i().powu(k) * deriv;
                    }
                    out[component_position(self.dim, &term.component)] += phase * factor;
                }
                Ok(out)
            }
            PhantomKind::PotentialBump { .. } => Err(Error::UnsupportedKind("potential-bump")),
        }
    }

    /// Samples the phantom at every grid node.
    pub fn sample_on_grid(&self, grid: &Grid) -> Result<SymTensorField> {
        self.validate()?;
        if grid.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: grid.dim(),
            });
        }
        Ok(SymTensorField::sample(&self.compile()?, grid))
    }

    /// `L^2` norm of the field summed over all `n^m` index tuples (closed
    /// form for the plain Gaussian kind, `None` otherwise).
    pub fn l2_norm_closed_form(&self) -> Option<f64> {
        match &self.kind {
            PhantomKind::GaussianTensor { coefficients } => {
                let g = (std::f64::consts::PI / (2.0 * self.width)).powf(self.dim as f64 / 4.0);
                Some(
                    coefficients
                        .iter()
                        .zip(multi_indices(self.dim, self.order))
                        .map(|(c, idx)| multiplicity(&idx) as f64 * c.abs() * g)
                        .sum(),
                )
            }
            _ => None,
        }
    }
}

/// Physicists' Hermite polynomial `H_k(u)` by the three-term recurrence.
fn hermite(k: u32, u: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * u);
    if k == 0 {
        return h0;
    }
    for j in 1..k {
        let h2 = 2.0 * u * h1 - 2.0 * j as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

fn dist2(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn norm2(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl FieldEval for PhantomSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn order(&self) -> usize {
        self.order
    }

    /// Gaussians are cut where `a |x-c|^2 = 50`, i.e. below `1e-21` of the
    /// peak, which leaves room for the polynomial factors of the fixtures.
    fn support(&self) -> Option<(Vec<f64>, f64)> {
        let radius = match &self.kind {
            PhantomKind::PotentialBump { radius, .. } => *radius,
            _ => (GAUSSIAN_CUTOFF / self.width).sqrt(),
        };
        Some((self.center.clone(), radius))
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            PhantomKind::GaussianTensor { coefficients } => {
                let g = (-self.width * dist2(x, &self.center)).exp();
                for (o, c) in out.iter_mut().zip(coefficients) {
                    *o = c * g;
                }
            }
            PhantomKind::PolynomialGaussianTensor { terms } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let mut d = [0.0; 8];
                let mut r2 = 0.0;
                for (a, (xi, ci)) in x.iter().zip(&self.center).enumerate() {
                    d[a] = xi - ci;
                    r2 += d[a] * d[a];
                }
                let g = (-self.width * r2).exp();
                if g == 0.0 {
                    return;
                }
                for term in terms {
                    let mut mono = term.coefficient;
                    for (&k, da) in term.exponents.iter().zip(&d) {
                        for _ in 0..k {
                            mono *= da;
                        }
                    }
                    out[component_position(self.dim, &term.component)] += mono;
                }
                out.iter_mut().for_each(|o| *o *= g);
            }
            PhantomKind::PotentialBump { radius, amplitude } => {
                let rho2 = dist2(x, &self.center) / (radius * radius);
                if rho2 >= 1.0 {
                    out.iter_mut().for_each(|o| *o = 0.0);
                    return;
                }
                let v = amplitude * (-1.0 / (1.0 - rho2)).exp();
                if self.order == 0 {
                    out[0] = v;
                } else {
                    let q = 1.0 - rho2;
                    let factor = -2.0 * v / (radius * radius * q * q);
                    for (o, (xi, ci)) in out.iter_mut().zip(x.iter().zip(&self.center)) {
                        *o = factor * (xi - ci);
                    }
                }
            }
        }
    }
}

/// A validated phantom with polynomial terms resolved to stored component
/// positions, for hot evaluation loops such as forward transforms.
#[derive(Debug, Clone)]
pub struct Phantom {
    spec: PhantomSpec,
    /// `(position, coefficient, exponents)` per polynomial term.
    terms: Vec<(usize, f64, [u32; 8])>,
}

impl Phantom {
    pub fn spec(&self) -> &PhantomSpec {
        &self.spec
    }
}

impl PhantomSpec {
    pub fn compile(&self) -> Result<Phantom> {
        self.validate()?;
        let terms = match &self.kind {
            PhantomKind::PolynomialGaussianTensor { terms } => terms
                .iter()
                .map(|t| {
                    let mut e = [0u32; 8];
                    e[..self.dim].copy_from_slice(&t.exponents);
                    (component_position(self.dim, &t.component), t.coefficient, e)
                })
                .collect(),
            _ => Vec::new(),
        };
        Ok(Phantom {
            spec: self.clone(),
            terms,
        })
    }
}

impl FieldEval for Phantom {
    fn dim(&self) -> usize {
        self.spec.dim
    }

    fn order(&self) -> usize {
        self.spec.order
    }

    fn support(&self) -> Option<(Vec<f64>, f64)> {
        self.spec.support()
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        if !matches!(self.spec.kind, PhantomKind::PolynomialGaussianTensor { .. }) {
            return self.spec.eval_into(x, out);
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut d = [0.0; 8];
        let mut r2 = 0.0;
        for (a, (xi, ci)) in x.iter().zip(&self.spec.center).enumerate() {
            d[a] = xi - ci;
            r2 += d[a] * d[a];
        }
        let g = (-self.spec.width * r2).exp();
        if g == 0.0 {
            return;
        }
        for (pos, coefficient, exponents) in &self.terms {
            let mut mono = g * coefficient;
            for (&k, da) in exponents.iter().zip(&d[..self.spec.dim]) {
                for _ in 0..k {
                    mono *= da;
                }
            }
            out[*pos] += mono;
        }
    }
}

/// Standard vector phantom used by the reconstruction pipelines: the
/// components are second derivatives of a Gaussian, so the zeroth and first
/// moments vanish and the averages decay fast enough to periodize.
pub fn moment_free_vector(width: f64, center: Vec<f64>) -> PhantomSpec {
    let a = width;
    // f_1 = (4a^2 x^2 - 2a) g, f_2 = 0.7 * 4a^2 x y g
    let terms = vec![
        PolyTerm {
            component: vec![0],
            exponents: vec![2, 0],
            coefficient: 4.0 * a * a,
        },
        PolyTerm {
            component: vec![0],
            exponents: vec![0, 0],
            coefficient: -2.0 * a,
        },
        PolyTerm {
            component: vec![1],
            exponents: vec![1, 1],
            coefficient: 0.7 * 4.0 * a * a,
        },
    ];
    PhantomSpec::polynomial_gaussian(2, 1, center, width, terms)
}

/// 2-tensor analogue of [`moment_free_vector`].
pub fn moment_free_2tensor(width: f64, center: Vec<f64>) -> PhantomSpec {
    let a = width;
    let aa = 4.0 * a * a;
    let terms = vec![
        // f_11 = d^2/dx^2 g
        PolyTerm {
            component: vec![0, 0],
            exponents: vec![2, 0],
            coefficient: aa,
        },
        PolyTerm {
            component: vec![0, 0],
            exponents: vec![0, 0],
            coefficient: -2.0 * a,
        },
        // f_12 = 0.5 d^2/dxdy g
        PolyTerm {
            component: vec![0, 1],
            exponents: vec![1, 1],
            coefficient: 0.5 * aa,
        },
        // f_22 = 0.8 * Laplacian g
        PolyTerm {
            component: vec![1, 1],
            exponents: vec![2, 0],
            coefficient: 0.8 * aa,
        },
        PolyTerm {
            component: vec![1, 1],
            exponents: vec![0, 2],
            coefficient: 0.8 * aa,
        },
        PolyTerm {
            component: vec![1, 1],
            exponents: vec![0, 0],
            coefficient: -0.8 * 4.0 * a,
        },
    ];
    PhantomSpec::polynomial_gaussian(2, 2, center, width, terms)
}

/// Evaluates a phantom and returns a [`SymTensor`].
pub fn eval_field(spec: &PhantomSpec, x: &[f64]) -> SymTensor {
    spec.eval(x)
}
