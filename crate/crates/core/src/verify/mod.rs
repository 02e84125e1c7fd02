//! Numerical experiments behind the stability, boundedness and unique
//! continuation statements, and the batch suites run by `divray verify`.
//!
//! Ratios use `p = 2` norms through Plancherel on the lattice; `p != 2`
//! norms are Bessel filtering followed by the grid `L^p` norm and are
//! labelled `approx`.

mod suites;

pub use suites::{run_suite, CheckRow, Suite, SuiteReport};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::averaging::{average_spectral, average_spectral_2tensor, average_spectral_vector, AverageField};
use crate::error::{invalid, Error, Result};
use crate::grid::{FieldEval, Grid, SymTensorField};
use crate::phantoms::{PhantomKind, PhantomSpec};
use crate::raytransform::{forward, BeamSamples, QuadratureSpec, RayIntegrator, RayWeight};
use crate::spectral::SpectralGrid;
use crate::sphere::DirectionSet;
use crate::symtensor::{component_count, multiplicity};

/// Number of phantoms in the default random family.
pub const FAMILY_SIZE: usize = 20;
/// Scale used by the homogeneity checks.
pub const SCALING_FACTOR: f64 = 3.7;

/// One measured norm ratio `left / right`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    pub phantom_id: String,
    pub kind: String,
    pub m: usize,
    pub s: f64,
    pub t: f64,
    pub p: f64,
    /// Target exponent of the `L^p - L^q` variant.
    pub q: Option<f64>,
    pub left: f64,
    pub right: f64,
    /// `NaN` only when both sides vanish.
    pub ratio: f64,
    pub grid_size: usize,
    /// `exact` for Plancherel (`p = 2`) norms, `approx` otherwise.
    pub norm: String,
}

impl RatioRecord {
    #[allow(clippy::too_many_arguments)]
    fn new(kind: &str, m: usize, s: f64, t: f64, p: f64, left: f64, right: f64, grid: &Grid) -> Self {
        Self {
            phantom_id: String::new(),
            kind: kind.to_string(),
            m,
            s,
            t,
            p,
            q: None,
            left,
            right,
            ratio: left / right,
            grid_size: grid.sizes[0],
            norm: if p == 2.0 { "exact" } else { "approx" }.to_string(),
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.phantom_id = id.into();
        self
    }
}

/// `sum_I mult(I) ||f_I||_{H^{t,2}}` through Plancherel.
pub fn plancherel_norm(g: &SpectralGrid, f: &SymTensorField, t: f64) -> f64 {
    f.component_indices()
        .iter()
        .zip(&f.components)
        .map(|(idx, c)| multiplicity(idx) as f64 * g.sobolev_norm_plancherel(c, t))
        .sum()
}

fn check_t(s: f64, t: f64) -> Result<()> {
    if !(t > -2.0 * s) {
        return Err(invalid("t", "stability ratios need t > -2s"));
    }
    Ok(())
}

fn nonzero(left: f64, right: f64) -> Result<()> {
    if right == 0.0 || left == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(())
}

/// `||f||_{H^t} / (||A^1 f||_{H^{t+2s}} + 2s ||A^0 f||_{H^{t+2s}})` for a vector field.
pub fn stability_ratio_vector(g: &SpectralGrid, f: &SymTensorField, s: f64, t: f64) -> Result<RatioRecord> {
    check_t(s, t)?;
    let avg = average_spectral_vector(g, f, s)?;
    let left = plancherel_norm(g, f, t);
    let right =
        plancherel_norm(g, &avg.ranks[1], t + 2.0 * s) + 2.0 * s * plancherel_norm(g, &avg.ranks[0], t + 2.0 * s);
    nonzero(left, right)?;
    Ok(RatioRecord::new("stability-vector", 1, s, t, 2.0, left, right, &g.grid))
}

/// `||f||_{H^t} / (||A^2 f|| + ||A^1 f|| + ||A^0 f||)` in `H^{t+2s}` for a 2-tensor field.
pub fn stability_ratio_2tensor(g: &SpectralGrid, f: &SymTensorField, s: f64, t: f64) -> Result<RatioRecord> {
    check_t(s, t)?;
    let avg = average_spectral_2tensor(g, f, s)?;
    let left = plancherel_norm(g, f, t);
    let right: f64 = avg.ranks.iter().map(|r| plancherel_norm(g, r, t + 2.0 * s)).sum();
    nonzero(left, right)?;
    Ok(RatioRecord::new(
        "stability-2tensor",
        2,
        s,
        t,
        2.0,
        left,
        right,
        &g.grid,
    ))
}

fn rank_of(avg: &AverageField, k: usize) -> Result<&SymTensorField> {
    avg.rank(k)
}

/// `||A^k f||_{H^{t+2s,p}} / ||f||_{H^{t,p}}` with spectral averages (`m <= 2`).
pub fn forward_bound_ratio(
    g: &SpectralGrid,
    f: &SymTensorField,
    s: f64,
    t: f64,
    p: f64,
    k: usize,
) -> Result<RatioRecord> {
    let avg = average_spectral(g, f, s)?;
    let a = rank_of(&avg, k)?;
    let (left, right) = if p == 2.0 {
        (plancherel_norm(g, a, t + 2.0 * s), plancherel_norm(g, f, t))
    } else {
        (g.tensor_norm(a, t + 2.0 * s, p)?, g.tensor_norm(f, t, p)?)
    };
    if right == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let mut rec = RatioRecord::new("forward-bound", f.order, s, t, p, left, right, &g.grid);
    rec.kind = format!("forward-bound-k{k}");
    Ok(rec)
}

/// Target exponent `q` with `1/q = 1/p - 2s/n`, both in `(1, inf)`.
pub fn lpq_exponent(n: usize, s: f64, p: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(invalid("p", "needs 1 < p < inf"));
    }
    let inv_q = 1.0 / p - 2.0 * s / n as f64;
    if !(inv_q > 0.0 && inv_q < 1.0) {
        return Err(invalid("p", format!("1/q = 1/p - 2s/n = {inv_q} leaves (0, 1)")));
    }
    Ok(1.0 / inv_q)
}

/// `||A^k f||_{L^q} / ||f||_{L^p}` with `1/q = 1/p - 2s/n`.
pub fn forward_bound_ratio_lpq(g: &SpectralGrid, f: &SymTensorField, s: f64, p: f64, k: usize) -> Result<RatioRecord> {
    let q = lpq_exponent(g.dim(), s, p)?;
    let avg = average_spectral(g, f, s)?;
    let left = g.tensor_norm(rank_of(&avg, k)?, 0.0, q)?;
    let right = g.tensor_norm(f, 0.0, p)?;
    if right == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let mut rec = RatioRecord::new("forward-bound-lpq", f.order, s, 0.0, p, left, right, &g.grid);
    rec.kind = format!("forward-bound-lpq-k{k}");
    rec.q = Some(q);
    rec.norm = "approx".into();
    Ok(rec)
}

/// `||f||_{H^t}` against the direction integral of
/// `||<D>^{t+2s} chi_{s,m} f(., eta)||_{L^2}` over the weighted direction set.
pub fn chi_stability_check(g: &SpectralGrid, beams: &BeamSamples, f: &SymTensorField, t: f64) -> Result<RatioRecord> {
    let s = match beams.weight {
        RayWeight::Fractional(s) => s,
        _ => return Err(invalid("weight", "needs fractional samples chi_{s,m}")),
    };
    let m = beams.order;
    if !(1..=2).contains(&m) || f.order != m {
        return Err(invalid("m", "the check covers m = 1, 2 with matching field order"));
    }
    let source = beams
        .source_grid
        .as_ref()
        .ok_or_else(|| invalid("beams", "needs samples on the full source grid"))?;
    if !source.same_geometry(&g.grid) || !f.grid.same_geometry(&g.grid) {
        return Err(Error::Metadata("beam, field and spectral grids differ".into()));
    }
    let weights = beams
        .directions
        .weights
        .as_ref()
        .ok_or_else(|| invalid("directions", "needs sphere quadrature weights"))?;
    let required = 2 * m + 4;
    if beams.dim == 2 && beams.directions.len() < required {
        return Err(Error::InsufficientDirections {
            required,
            found: beams.directions.len(),
        });
    }
    let right: f64 = (0..beams.directions.len())
        .map(|d| weights[d] * g.sobolev_norm_plancherel(&beams.direction_column(d), t + 2.0 * s))
        .sum();
    let left = plancherel_norm(g, f, t);
    let mut rec = RatioRecord::new("chi-stability", m, s, t, 2.0, left, right, &g.grid);
    if left == 0.0 && right == 0.0 {
        rec.ratio = f64::NAN;
    }
    Ok(rec)
}

/// Gaussian tensor phantoms with `a in [1, 2.5]` and `|c| <= 1.5`, seeded.
pub fn phantom_family(seed: u64, dim: usize, m: usize, count: usize) -> Vec<(String, PhantomSpec)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((m as u64) << 32));
    (0..count)
        .map(|i| {
            let width = rng.gen_range(1.0..2.5);
            let center = loop {
                let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
                if c.iter().map(|v| v * v).sum::<f64>() <= 2.25 {
                    break c;
                }
            };
            let coefficients = (0..component_count(dim, m)).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (
                format!("g{m}-{i:02}"),
                PhantomSpec::gaussian(dim, m, center, width, coefficients),
            )
        })
        .collect()
}

/// Open ball `U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    /// A `k^n` lattice inside the ball (half-width `0.6 r` per axis).
    pub fn lattice(&self, k: usize) -> Vec<Vec<f64>> {
        let n = self.center.len();
        let half = 0.6 * self.radius;
        let step = if k > 1 { 2.0 * half / (k - 1) as f64 } else { 0.0 };
        let total = k.pow(n as u32);
        (0..total)
            .map(|mut flat| {
                let mut x = vec![0.0; n];
                for a in (0..n).rev() {
                    let i = flat % k;
                    flat /= k;
                    x[a] = self.center[a] - if k > 1 { half } else { 0.0 } + i as f64 * step;
                }
                x
            })
            .collect()
    }
}

/// Minimum source count and direction count of a UCP experiment.
pub const UCP_SOURCES: usize = 25;
pub const UCP_DIRECTIONS: usize = 32;
/// Step of the directional difference `-d/dtau D^0 f(x + tau xi, xi)`.
pub const UCP_FD_STEP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcpExperiment {
    pub label: String,
    pub u: Ball,
    pub phantom: PhantomSpec,
    pub sources: usize,
    pub directions: usize,
    /// `max |D^{0,m} f(x, xi)|` over rays launched from `U`.
    pub max_abs_data: f64,
    /// `L^2` norm of the field summed over index tuples.
    pub field_norm: f64,
    /// Function case: `max |f(x)|` on `U` as recovered from the data.
    pub recovered_max_on_u: Option<f64>,
    /// Function case: `max |recovered - f|` on `U`.
    pub recovery_error: Option<f64>,
    /// Counterexample: `max |v_recovered - v|` inside the bump support.
    pub v_recovery_error: Option<f64>,
}

/// `L^2` norm over the field's support ball by a 256-per-axis Riemann sum.
pub fn field_l2_norm(field: &dyn FieldEval) -> Result<f64> {
    let (center, radius) = field
        .support()
        .ok_or_else(|| invalid("field", "norm needs a bounded support"))?;
    let n = field.dim();
    let size = 256;
    let h = 2.0 * radius / size as f64;
    let origin: Vec<f64> = center.iter().map(|c| c - radius).collect();
    let grid = Grid::new(vec![size; n], origin, vec![h; n])?;
    let sampled = SymTensorField::sample(field, &grid);
    let vol = grid.cell_volume();
    Ok(sampled
        .component_indices()
        .iter()
        .zip(&sampled.components)
        .map(|(idx, c)| multiplicity(idx) as f64 * (c.iter().map(|v| v * v).sum::<f64>() * vol).sqrt())
        .sum())
}

fn ucp_directions(dirs: &DirectionSet) -> Result<()> {
    if dirs.len() < UCP_DIRECTIONS {
        return Err(Error::InsufficientDirections {
            required: UCP_DIRECTIONS,
            found: dirs.len(),
        });
    }
    Ok(())
}

/// Scalar case: data `D^0 f` from `U` and `f|_U = -d/dtau D^0 f(x + tau xi, xi)`.
pub fn ucp_function_experiment(
    label: &str,
    u: &Ball,
    phantom: &PhantomSpec,
    dirs: &DirectionSet,
    quad: &QuadratureSpec,
) -> Result<UcpExperiment> {
    if phantom.order != 0 {
        return Err(invalid("phantom", "the function experiment needs m = 0"));
    }
    ucp_directions(dirs)?;
    let field = phantom.compile()?;
    let sources = u.lattice(5);
    let (beams, _) = forward(&field, sources.clone(), None, dirs, RayWeight::Moment(0), quad)?;
    let integ = RayIntegrator::new(RayWeight::Moment(0), quad)?;
    let h = UCP_FD_STEP;
    let stencil = [
        (-2.0, 1.0 / 12.0),
        (-1.0, -8.0 / 12.0),
        (1.0, 8.0 / 12.0),
        (2.0, -1.0 / 12.0),
    ];
    let mut recovered_max: f64 = 0.0;
    let mut error: f64 = 0.0;
    for x in &sources {
        let truth = field.eval(x).components()[0];
        for xi in &dirs.directions {
            let mut derivative = 0.0;
            for &(o, w) in &stencil {
                let p: Vec<f64> = x.iter().zip(xi).map(|(a, b)| a + o * h * b).collect();
                derivative += w * integ.integrate(&field, &p, xi)?.value;
            }
            let value = -derivative / h;
            recovered_max = recovered_max.max(value.abs());
            error = error.max((value - truth).abs());
        }
    }
    Ok(UcpExperiment {
        label: label.to_string(),
        u: u.clone(),
        phantom: phantom.clone(),
        sources: sources.len(),
        directions: dirs.len(),
        max_abs_data: beams.max_abs(),
        field_norm: field_l2_norm(&field)?,
        recovered_max_on_u: Some(recovered_max),
        recovery_error: Some(error),
        v_recovery_error: None,
    })
}

/// Vector case `f = dv` with `v` supported away from `U`: the data from `U`
/// vanish while `f` does not, and `v = -D^{0,1} f` inside the support.
pub fn ucp_counterexample(
    label: &str,
    u: &Ball,
    bump: &PhantomSpec,
    dirs: &DirectionSet,
    quad: &QuadratureSpec,
) -> Result<UcpExperiment> {
    let radius = match bump.kind {
        PhantomKind::PotentialBump { radius, .. } if bump.order == 1 => radius,
        _ => return Err(invalid("bump", "needs an order-1 potential bump (f = dv)")),
    };
    let gap: f64 = u
        .center
        .iter()
        .zip(&bump.center)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if gap < u.radius + radius {
        return Err(invalid("bump", "bump support overlaps U"));
    }
    ucp_directions(dirs)?;
    let field = bump.compile()?;
    let sources = u.lattice(5);
    let (beams, _) = forward(&field, sources.clone(), None, dirs, RayWeight::Moment(0), quad)?;
    let inside = Ball {
        center: bump.center.clone(),
        radius,
    }
    .lattice(4);
    let integ = RayIntegrator::new(RayWeight::Moment(0), quad)?;
    let mut v_error: f64 = 0.0;
    for x in &inside {
        let v = bump.potential(x);
        for xi in dirs.directions.iter().step_by(4) {
            let recovered = -integ.integrate(&field, x, xi)?.value;
            v_error = v_error.max((recovered - v).abs());
        }
    }
    Ok(UcpExperiment {
        label: label.to_string(),
        u: u.clone(),
        phantom: bump.clone(),
        sources: sources.len(),
        directions: dirs.len(),
        max_abs_data: beams.max_abs(),
        field_norm: field_l2_norm(&field)?,
        recovered_max_on_u: None,
        recovery_error: None,
        v_recovery_error: Some(v_error),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_stays_in_ball() {
        let b = Ball {
            center: vec![-4.0, 0.0],
            radius: 1.0,
        };
        let pts = b.lattice(5);
        assert_eq!(pts.len(), 25);
        for p in &pts {
            let r = ((p[0] + 4.0).powi(2) + p[1].powi(2)).sqrt();
            assert!(r < 1.0);
        }
    }

    #[test]
    fn lpq_pairing() {
        assert!((lpq_exponent(2, 0.25, 2.0).unwrap() - 4.0).abs() < 1e-12);
        assert!(lpq_exponent(2, 0.75, 1.5).is_err());
        assert!(lpq_exponent(2, 0.25, 1.0).is_err());
    }

    #[test]
    fn family_is_seeded() {
        let a = phantom_family(7, 2, 1, 5);
        let b = phantom_family(7, 2, 1, 5);
        assert_eq!(a, b);
        for (_, p) in &a {
            assert!((1.0..2.5).contains(&p.width));
            assert!(p.center.iter().map(|v| v * v).sum::<f64>() <= 2.25);
        }
        assert_ne!(phantom_family(8, 2, 1, 5), a);
    }
}
