//! Batch suites with deterministic CSV output (`.` decimals, `\n` line
//! ends, header row). Random draws come from a ChaCha stream seeded by the
//! caller; iteration orders are fixed.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::averaging::{average_spectral, averages_by_quadrature};
use crate::phantoms::{moment_free_2tensor, moment_free_vector, PolyTerm};
use crate::raytransform::{beam_integral, forward_grid, momentum_reduce};
use crate::reconstruct::{
    compare_fields, reconstruct_2tensor, reconstruct_from_weighted, reconstruct_pointwise, reconstruct_vector,
    required_directions,
};
use crate::special::gamma;
use crate::spectral::{MultiplierOp, ZeroModePolicy};
use crate::symtensor::{multi_indices, polarization_family, polarize, subset_sum, symmetrize, RawTensor, SymTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Identities,
    Stability,
    Ucp,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Stability => "stability",
            Suite::Ucp => "ucp",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identities" => Ok(Suite::Identities),
            "stability" => Ok(Suite::Stability),
            "ucp" => Ok(Suite::Ucp),
            other => Err(invalid("suite", format!("unknown suite {other:?}"))),
        }
    }
}

/// A pass/fail comparison `value < limit` (or `value > limit` when `above`).
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: String,
    pub case: String,
    pub value: f64,
    pub limit: f64,
    pub above: bool,
}

impl CheckRow {
    fn below(check: &str, case: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            check: check.to_string(),
            case: case.into(),
            value,
            limit,
            above: false,
        }
    }

    fn above(check: &str, case: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            above: true,
            ..Self::below(check, case, value, limit)
        }
    }

    pub fn pass(&self) -> bool {
        if self.above {
            self.value > self.limit
        } else {
            self.value < self.limit
        }
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.check.clone(),
            self.case.clone(),
            num(self.value),
            if self.above { "above" } else { "below" }.to_string(),
            num(self.limit),
            self.pass().to_string(),
        ]
    }
}

/// Plain decimals in a readable range, scientific notation outside it.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e6).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

const CHECK_HEADER: [&str; 6] = ["check", "case", "value", "bound", "limit", "pass"];

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub checks: Vec<CheckRow>,
}

impl SuiteReport {
    pub fn failures(&self) -> Vec<&CheckRow> {
        self.checks.iter().filter(|c| !c.pass()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// One JSON object per row keyed by the header; numeric and boolean
    /// cells keep their type.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let obj: serde_json::Map<String, serde_json::Value> = self
                .header
                .iter()
                .zip(row)
                .map(|(k, v)| (k.clone(), cell_value(v)))
                .collect();
            out.push_str(&serde_json::Value::Object(obj).to_string());
            out.push('\n');
        }
        out
    }
}

fn cell_value(cell: &str) -> serde_json::Value {
    match cell {
        "true" => true.into(),
        "false" => false.into(),
        "" => serde_json::Value::Null,
        _ => match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => v.into(),
            _ => cell.into(),
        },
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    match suite {
        Suite::Identities => identities(seed),
        Suite::Stability => stability(seed),
        Suite::Ucp => ucp(),
    }
}

fn check_report(suite: Suite, checks: Vec<CheckRow>) -> SuiteReport {
    SuiteReport {
        suite,
        header: CHECK_HEADER.iter().map(|s| s.to_string()).collect(),
        rows: checks.iter().map(CheckRow::cells).collect(),
        checks,
    }
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Desk-scale periodic grid `[-L/2, L/2)^2`.
fn desk_grid(size: usize, length: f64) -> Result<SpectralGrid> {
    SpectralGrid::new(Grid::cube(2, size, length)?, ZeroModePolicy::Zero)
}

fn identities(seed: u64) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    checks.extend(polarization_checks(seed)?);
    checks.extend(beam_checks()?);
    checks.extend(momentum_checks()?);
    checks.extend(pointwise_checks()?);
    let g = desk_grid(64, 16.0)?;
    checks.extend(operator_checks(&g, seed)?);
    checks.extend(relation_checks(&g)?);
    checks.extend(roundtrip_checks(&g)?);
    checks.extend(cross_method_checks(&g)?);
    Ok(check_report(Suite::Identities, checks))
}

/// `<f, T>` over all index tuples.
fn full_contraction(f: &SymTensor, t: &SymTensor) -> f64 {
    multi_indices(f.dim(), f.order())
        .iter()
        .map(|idx| multiplicity(idx) as f64 * f.get(idx) * t.get(idx))
        .sum()
}

fn polarization_checks(seed: u64) -> Result<Vec<CheckRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for m in 1..=4 {
        let family = polarization_family(m)?;
        for n in 2..=3 {
            let mut worst: f64 = 0.0;
            for _ in 0..100 {
                let f = SymTensor::from_fn(n, m, |_| rng.gen_range(-1.0..1.0));
                let xis: Vec<Vec<f64>> = (0..m)
                    .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .collect();
                let refs: Vec<&[f64]> = xis.iter().map(Vec::as_slice).collect();
                let mut values = BTreeMap::new();
                for term in &family.entries {
                    values.insert(term.subset.clone(), f.contract_power(&subset_sum(&refs, &term.subset))?);
                }
                let lhs = polarize(&values, &family)?;
                let rhs = full_contraction(&f, &symmetrize(&RawTensor::outer(&refs)?));
                worst = worst.max((lhs - rhs).abs());
            }
            out.push(CheckRow::below("polarization", format!("m={m} n={n}"), worst, 1e-10));
        }
    }
    Ok(out)
}

fn beam_checks() -> Result<Vec<CheckRow>> {
    let g = PhantomSpec::gaussian(2, 0, vec![0.0, 0.0], 1.0, vec![1.0]);
    let quad = QuadratureSpec::default();
    let cases = [
        ("w=0", RayWeight::Moment(0), std::f64::consts::PI.sqrt() / 2.0),
        ("w=1", RayWeight::Moment(1), 0.5),
        ("s=0.25", RayWeight::Fractional(0.25), gamma(0.25)? / 2.0),
    ];
    cases
        .iter()
        .map(|(case, w, exact)| {
            let v = beam_integral(&g, &[0.0, 0.0], &[1.0, 0.0], *w, &quad)?.value;
            Ok(CheckRow::below(
                "beam-closed-form",
                *case,
                ((v - exact) / exact).abs(),
                1e-9,
            ))
        })
        .collect()
}

/// Square source grid of `size` nodes with spacing `h` centred at `x`.
fn local_grid(x: &[f64], size: usize, h: f64) -> Result<Grid> {
    let half = (size - 1) as f64 / 2.0 * h;
    Grid::new(
        vec![size; x.len()],
        x.iter().map(|c| c - half).collect(),
        vec![h; x.len()],
    )
}

fn test_gaussian(m: usize) -> PhantomSpec {
    let coefficients = match m {
        0 => vec![1.0],
        1 => vec![1.0, -0.6],
        _ => vec![0.8, -0.5, 1.1],
    };
    PhantomSpec::gaussian(2, m, vec![0.3, -0.1], 1.0, coefficients)
}

fn momentum_checks() -> Result<Vec<CheckRow>> {
    let quad = QuadratureSpec::default();
    let dirs = DirectionSet::equispaced_2d(8)?;
    let grid = local_grid(&[0.5, -0.25], 25, 1.0 / 16.0)?;
    let mut out = Vec::new();
    for m in 0..=1 {
        let field = test_gaussian(m).compile()?;
        let direct: Vec<BeamSamples> = (0..=2)
            .map(|l| Ok(forward_grid(&field, &grid, &dirs, RayWeight::Moment(l), &quad)?.0))
            .collect::<Result<_>>()?;
        for l in 1..=2u32 {
            let reduced = momentum_reduce(&direct[l as usize])?;
            let reference = forward_grid(&field, &grid.trimmed(2)?, &dirs, RayWeight::Moment(l - 1), &quad)?.0;
            out.push(CheckRow::below(
                "momentum-reduction",
                format!("l={l} m={m}"),
                rel_l2(&reduced.values, &reference.values),
                1e-3,
            ));
        }
        let twice = momentum_reduce(&momentum_reduce(&direct[2])?)?;
        let reference = forward_grid(&field, &grid.trimmed(4)?, &dirs, RayWeight::Moment(0), &quad)?.0;
        out.push(CheckRow::below(
            "momentum-reduction",
            format!("l=2->0 m={m}"),
            rel_l2(&twice.values, &reference.values),
            1e-3,
        ));
    }
    Ok(out)
}

/// Largest per-component ratio `max |err_c| / max |truth_c|`.
fn componentwise_error(recon: &[Vec<f64>], truth: &[Vec<f64>]) -> f64 {
    recon
        .iter()
        .zip(truth)
        .map(|(r, t)| max_diff(r, t) / max_abs(t))
        .fold(0.0, f64::max)
}

fn pointwise_checks() -> Result<Vec<CheckRow>> {
    let quad = QuadratureSpec::default();
    let x = [0.5, -0.25];
    let mut out = Vec::new();
    for m in 0..=2 {
        let field = test_gaussian(m).compile()?;
        let integ = RayIntegrator::new(RayWeight::Moment(0), &quad)?;
        let d0 = |p: &[f64], xi: &[f64]| Ok(integ.integrate(&field, p, xi)?.value);
        let rec = reconstruct_pointwise(&d0, &x, m, 1.0 / 32.0)?;
        let truth = field.eval(&x);
        let err = rec
            .components()
            .iter()
            .zip(truth.components())
            .map(|(a, b)| ((a - b) / b).abs())
            .fold(0.0, f64::max);
        out.push(CheckRow::below("pointwise", format!("m={m} direct h=1/32"), err, 1e-3));
        let dirs = DirectionSet::from_directions(required_directions(2, m))?;
        for k in 0..=2u32 {
            let size = 4 * (k as usize + 1) + 5;
            let grid = local_grid(&x, size, 1.0 / 16.0)?;
            let (beams, _) = forward_grid(&field, &grid, &dirs, RayWeight::Moment(k), &quad)?;
            let rec = reconstruct_from_weighted(&beams)?;
            let truth = SymTensorField::sample(&field, &rec.grid);
            out.push(CheckRow::below(
                "pointwise",
                format!("m={m} k={k}"),
                componentwise_error(&rec.components, &truth.components),
                1e-2,
            ));
        }
    }
    Ok(out)
}

fn laplacian() -> MultiplierOp {
    MultiplierOp::new("lap", 2.0, false, |z| {
        num_complex::Complex64::new(-z.iter().map(|v| v * v).sum::<f64>(), 0.0)
    })
}

/// Laplacian of the unit Gaussian at `c`: smooth and mean-free.
fn mean_free_scalar(c: Vec<f64>) -> PhantomSpec {
    let terms = vec![
        PolyTerm {
            component: vec![],
            exponents: vec![2, 0],
            coefficient: 4.0,
        },
        PolyTerm {
            component: vec![],
            exponents: vec![0, 2],
            coefficient: 4.0,
        },
        PolyTerm {
            component: vec![],
            exponents: vec![0, 0],
            coefficient: -4.0,
        },
    ];
    PhantomSpec::polynomial_gaussian(2, 0, c, 1.0, terms)
}

fn operator_checks(g: &SpectralGrid, seed: u64) -> Result<Vec<CheckRow>> {
    let mut out = Vec::new();
    let u = mean_free_scalar(vec![0.4, -0.3])
        .sample_on_grid(&g.grid)?
        .components
        .remove(0);
    let mean = u.iter().sum::<f64>() / u.len() as f64;
    let centred: Vec<f64> = u.iter().map(|v| v - mean).collect();
    let mut rr = vec![0.0; u.len()];
    for j in 0..2 {
        let rj = MultiplierOp::riesz(j);
        let once = g.apply(&rj, &u)?;
        for (a, b) in rr.iter_mut().zip(g.apply(&rj, &once)?) {
            *a += b;
        }
    }
    let neg: Vec<f64> = centred.iter().map(|v| -v).collect();
    out.push(CheckRow::below(
        "riesz-square-sum",
        "sum R_j R_j = -Id",
        max_diff(&rr, &neg) / max_abs(&u),
        1e-10,
    ));
    let (alpha, beta) = (0.3, 0.5);
    let composed = g.apply(
        &MultiplierOp::riesz_potential(alpha),
        &g.apply(&MultiplierOp::riesz_potential(beta), &u)?,
    )?;
    let direct = g.apply(&MultiplierOp::riesz_potential(alpha + beta), &u)?;
    out.push(CheckRow::below(
        "riesz-potential-composition",
        format!("alpha={alpha} beta={beta}"),
        max_diff(&composed, &direct) / max_abs(&direct),
        1e-12,
    ));
    // multiplier bounds on a rough seeded field
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let rough: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for t in [0.0, 1.0] {
        let base = g.sobolev_norm_plancherel(&rough, t);
        for j in 0..2 {
            let r = g.sobolev_norm_plancherel(&g.apply(&MultiplierOp::riesz(j), &rough)?, t) / base;
            out.push(CheckRow::below("riesz-bound", format!("j={j} t={t}"), r, 1.0 + 1e-12));
        }
        for s in [0.25, 0.75] {
            let r = g.sobolev_norm_plancherel(&g.apply(&MultiplierOp::power(2.0 * s), &rough)?, t - 2.0 * s) / base;
            out.push(CheckRow::below(
                "frac-laplacian-bound",
                format!("s={s} t={t}"),
                r,
                1.0 + 1e-12,
            ));
        }
    }
    Ok(out)
}

fn apply_sum(g: &SpectralGrid, terms: &[(f64, MultiplierOp, &[f64])]) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; g.len()];
    for (c, op, u) in terms {
        for (a, v) in acc.iter_mut().zip(g.apply(op, u)?) {
            *a += c * v;
        }
    }
    Ok(acc)
}

/// Relation residuals `||lhs - rhs|| / ||rhs||` for a vector field.
fn vector_relations(g: &SpectralGrid, f: &SymTensorField, s: f64) -> Result<Vec<(String, f64)>> {
    let avg = average_spectral_vector(g, f, s)?;
    let a0 = &avg.ranks[0].components[0];
    let d = |j| MultiplierOp::derivative(j);
    let lhs = g.apply(&MultiplierOp::power(2.0 * s + 1.0), a0)?;
    let rhs = apply_sum(g, &[(-1.0, d(0), &f.components[0]), (-1.0, d(1), &f.components[1])])?;
    let mut out = vec![("divergence".to_string(), rel_l2(&lhs, &rhs))];
    for i in 0..2 {
        let lhs = g.apply(&MultiplierOp::power(2.0 * s), &avg.ranks[1].components[i])?;
        let rhs = apply_sum(
            g,
            &[
                (-1.0, MultiplierOp::identity(), &f.components[i]),
                (-2.0 * s, MultiplierOp::power(2.0 * s).then(&MultiplierOp::riesz(i)), a0),
            ],
        )?;
        out.push((format!("rank1 i={i}"), rel_l2(&lhs, &rhs)));
    }
    Ok(out)
}

/// Relation residuals for a symmetric 2-tensor field.
fn tensor2_relations(g: &SpectralGrid, f: &SymTensorField, s: f64) -> Result<Vec<(String, f64)>> {
    let avg = average_spectral_2tensor(g, f, s)?;
    let a0 = &avg.ranks[0].components[0];
    let d = |j| MultiplierOp::derivative(j);
    let c = |a: usize, b: usize| f.component(&[a.min(b), a.max(b)]);
    let lap = laplacian();
    let lhs = g.apply(&MultiplierOp::power(2.0 * s + 2.0), a0)?;
    let mut terms: Vec<(f64, MultiplierOp, &[f64])> = vec![(1.0, lap.clone(), c(0, 0)), (1.0, lap.clone(), c(1, 1))];
    for a in 0..2 {
        for b in 0..2 {
            terms.push((-2.0 * s, d(a).then(&d(b)), c(a, b)));
        }
    }
    let rhs = apply_sum(g, &terms)?;
    let mut out = vec![("rank0".to_string(), rel_l2(&lhs, &rhs))];
    for i in 0..2 {
        let lhs = g.apply(&MultiplierOp::power(2.0 * s + 3.0), &avg.ranks[1].components[i])?;
        let mut terms: Vec<(f64, MultiplierOp, &[f64])> = Vec::new();
        for j in 0..2 {
            terms.push((1.0, lap.then(&d(i)), c(j, j)));
            terms.push((2.0, lap.then(&d(j)), c(j, i)));
        }
        for a in 0..2 {
            for b in 0..2 {
                terms.push((-(1.0 + 2.0 * s), d(i).then(&d(a)).then(&d(b)), c(a, b)));
            }
        }
        out.push((format!("rank1 i={i}"), rel_l2(&lhs, &apply_sum(g, &terms)?)));
    }
    Ok(out)
}

/// Lattice mode `amp cos(zeta . x + phase)` with `zeta = 2 pi k / L`.
fn lattice_mode(grid: &Grid, k: [f64; 2], amp: f64, phase: f64) -> Vec<f64> {
    let l = grid.lengths();
    grid.points()
        .iter()
        .map(|p| {
            let arg: f64 = (0..2).map(|a| 2.0 * std::f64::consts::PI * k[a] * p[a] / l[a]).sum();
            amp * (arg + phase).cos()
        })
        .collect()
}

fn relation_checks(g: &SpectralGrid) -> Result<Vec<CheckRow>> {
    let mut out = Vec::new();
    let grid = &g.grid;
    let k = [3.0, 2.0];
    let vec_mode = SymTensorField::new(
        grid.clone(),
        1,
        vec![lattice_mode(grid, k, 0.7, 0.0), lattice_mode(grid, k, -0.4, 0.5)],
    )?;
    let ten_mode = SymTensorField::new(
        grid.clone(),
        2,
        vec![
            lattice_mode(grid, k, 1.0, 0.0),
            lattice_mode(grid, k, 0.3, 0.2),
            lattice_mode(grid, k, -0.6, 0.9),
        ],
    )?;
    let vec_gauss = moment_free_vector(1.0, vec![0.3, -0.2]).sample_on_grid(grid)?;
    let ten_gauss = moment_free_2tensor(1.0, vec![0.3, -0.2]).sample_on_grid(grid)?;
    for s in [0.25, 0.75] {
        for (case, f, tol) in [("mode", &vec_mode, 1e-8), ("gaussian", &vec_gauss, 1e-3)] {
            for (name, r) in vector_relations(g, f, s)? {
                out.push(CheckRow::below(
                    "relation-vector",
                    format!("{case} s={s} {name}"),
                    r,
                    tol,
                ));
            }
        }
        for (case, f, tol) in [("mode", &ten_mode, 1e-8), ("gaussian", &ten_gauss, 1e-3)] {
            for (name, r) in tensor2_relations(g, f, s)? {
                out.push(CheckRow::below(
                    "relation-2tensor",
                    format!("{case} s={s} {name}"),
                    r,
                    tol,
                ));
            }
        }
    }
    Ok(out)
}

fn roundtrip_checks(g: &SpectralGrid) -> Result<Vec<CheckRow>> {
    let mut out = Vec::new();
    for m in 1..=2 {
        let f = test_gaussian(m).sample_on_grid(&g.grid)?;
        for s in [0.25, 0.75] {
            let avg = average_spectral(g, &f, s)?;
            let rec = if m == 1 {
                reconstruct_vector(g, &avg)?
            } else {
                reconstruct_2tensor(g, &avg)?
            };
            let mut worst: f64 = 0.0;
            for (r, c) in rec.components.iter().zip(&f.components) {
                let mean = c.iter().sum::<f64>() / c.len() as f64;
                let centred: Vec<f64> = c.iter().map(|v| v - mean).collect();
                worst = worst.max(max_diff(r, &centred));
            }
            out.push(CheckRow::below(
                "spectral-roundtrip",
                format!("m={m} s={s}"),
                worst / f.max_abs(),
                1e-9,
            ));
        }
    }
    Ok(out)
}

/// Quadrature against spectral averages for the moment-free phantoms.
fn cross_method_checks(g: &SpectralGrid) -> Result<Vec<CheckRow>> {
    let quad = QuadratureSpec::default();
    let dirs = DirectionSet::equispaced_2d(64)?;
    let s = 0.25;
    let mut out = Vec::new();
    for spec in [
        moment_free_vector(1.0, vec![0.3, -0.2]),
        moment_free_2tensor(1.0, vec![0.3, -0.2]),
    ] {
        let field = spec.compile()?;
        let (beams, _) = forward_grid(&field, &g.grid, &dirs, RayWeight::Fractional(s), &quad)?;
        let by_quadrature = averages_by_quadrature(&beams)?;
        let spectral = average_spectral(g, &spec.sample_on_grid(&g.grid)?, s)?;
        for k in 0..=spec.order {
            let report = compare_fields("cross-method", &by_quadrature.ranks[k], &spectral.ranks[k], 8, false)?;
            out.push(CheckRow::below(
                "average-cross-method",
                format!("m={} k={k} s={s}", spec.order),
                report.relative_l2.unwrap_or(f64::NAN),
                1e-2,
            ));
        }
    }
    Ok(out)
}

const RATIO_HEADER: [&str; 13] = [
    "phantom",
    "kind",
    "m",
    "s",
    "t",
    "p",
    "q",
    "left",
    "right",
    "ratio",
    "grid",
    "norm",
    "lambda_rel_diff",
];

fn ratio_cells(r: &RatioRecord, lambda_diff: Option<f64>) -> Vec<String> {
    vec![
        r.phantom_id.clone(),
        r.kind.clone(),
        r.m.to_string(),
        num(r.s),
        num(r.t),
        num(r.p),
        r.q.map(num).unwrap_or_default(),
        num(r.left),
        num(r.right),
        num(r.ratio),
        r.grid_size.to_string(),
        r.norm.clone(),
        lambda_diff.map(num).unwrap_or_default(),
    ]
}

/// Phantoms of the family that also get the direction-integrated check.
const CHI_PHANTOMS: usize = 4;

fn stability(seed: u64) -> Result<SuiteReport> {
    let g = desk_grid(128, 16.0)?;
    let chi_grid = desk_grid(64, 16.0)?;
    let chi_dirs = DirectionSet::equispaced_2d(32)?;
    let quad = QuadratureSpec::default();
    let mut records: Vec<(RatioRecord, Option<f64>)> = Vec::new();
    let mut checks = Vec::new();
    for m in 1..=2 {
        for (id, spec) in phantom_family(seed, 2, m, FAMILY_SIZE) {
            let f = spec.sample_on_grid(&g.grid)?;
            let scaled = f.scaled(SCALING_FACTOR);
            for s in [0.25, 0.75] {
                for t in [0.0, 1.0] {
                    let ratio = |f: &SymTensorField| {
                        if m == 1 {
                            stability_ratio_vector(&g, f, s, t)
                        } else {
                            stability_ratio_2tensor(&g, f, s, t)
                        }
                    };
                    let r = ratio(&f)?.with_id(&id);
                    let diff = ((ratio(&scaled)?.ratio - r.ratio) / r.ratio).abs();
                    let case = format!("{id} s={s} t={t}");
                    checks.push(CheckRow::below("lambda-invariance", case.clone(), diff, 1e-12));
                    checks.push(CheckRow::above("denominator-positive", case, r.right / r.left, 1e-8));
                    records.push((r, Some(diff)));
                }
                for k in 0..=m {
                    for (t, p) in [(0.0, 2.0), (1.0, 2.0), (0.0, 4.0)] {
                        let r = forward_bound_ratio(&g, &f, s, t, p, k)?.with_id(&id);
                        let diff = ((forward_bound_ratio(&g, &scaled, s, t, p, k)?.ratio - r.ratio) / r.ratio).abs();
                        records.push((r, Some(diff)));
                    }
                    if let Ok(r) = forward_bound_ratio_lpq(&g, &f, s, 2.0, k) {
                        records.push((r.with_id(&id), None));
                    }
                }
            }
        }
        for (id, spec) in phantom_family(seed, 2, m, CHI_PHANTOMS) {
            let field = spec.compile()?;
            let f = spec.sample_on_grid(&chi_grid.grid)?;
            for s in [0.25, 0.75] {
                let (beams, _) = forward_grid(&field, &chi_grid.grid, &chi_dirs, RayWeight::Fractional(s), &quad)?;
                for t in [0.0, 1.0] {
                    let r = chi_stability_check(&chi_grid, &beams, &f, t)?.with_id(&id);
                    let scaled =
                        chi_stability_check(&chi_grid, &beams.scaled(SCALING_FACTOR), &f.scaled(SCALING_FACTOR), t)?;
                    let diff = ((scaled.ratio - r.ratio) / r.ratio).abs();
                    checks.push(CheckRow::below(
                        "lambda-invariance",
                        format!("{id} chi s={s} t={t}"),
                        diff,
                        1e-12,
                    ));
                    records.push((r, Some(diff)));
                }
            }
        }
    }
    for (r, _) in &records {
        checks.push(CheckRow::below(
            "ratio-finite",
            format!("{} {} s={} t={} p={}", r.phantom_id, r.kind, r.s, r.t, r.p),
            if r.ratio.is_finite() && r.ratio > 0.0 { 0.0 } else { 1.0 },
            0.5,
        ));
    }
    // envelope = largest ratio per (kind, m, s, t, p)
    let mut envelopes: BTreeMap<(String, usize, String, String, String), RatioRecord> = BTreeMap::new();
    for (r, _) in &records {
        let key = (r.kind.clone(), r.m, num(r.s), num(r.t), num(r.p));
        let entry = envelopes.entry(key).or_insert_with(|| RatioRecord {
            phantom_id: "envelope".into(),
            left: f64::NAN,
            right: f64::NAN,
            ratio: 0.0,
            ..r.clone()
        });
        entry.ratio = entry.ratio.max(r.ratio);
    }
    let mut rows: Vec<Vec<String>> = records.iter().map(|(r, d)| ratio_cells(r, *d)).collect();
    rows.extend(envelopes.values().map(|r| ratio_cells(r, None)));
    Ok(SuiteReport {
        suite: Suite::Stability,
        header: RATIO_HEADER.iter().map(|s| s.to_string()).collect(),
        rows,
        checks,
    })
}

const UCP_HEADER: [&str; 11] = [
    "experiment",
    "u_center",
    "u_radius",
    "sources",
    "directions",
    "max_abs_data",
    "field_norm",
    "recovered_max_on_u",
    "recovery_error",
    "v_recovery_error",
    "pass",
];

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn ucp() -> Result<SuiteReport> {
    let quad = QuadratureSpec::default();
    let dirs = DirectionSet::equispaced_2d(UCP_DIRECTIONS)?;
    let u = Ball {
        center: vec![-4.0, 0.0],
        radius: 1.0,
    };
    let far = vec![4.0, 0.0];
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut push = |e: &UcpExperiment, own: Vec<CheckRow>, checks: &mut Vec<CheckRow>| {
        let pass = own.iter().all(CheckRow::pass);
        rows.push(vec![
            e.label.clone(),
            e.u.center.iter().map(|c| num(*c)).collect::<Vec<_>>().join(" "),
            num(e.u.radius),
            e.sources.to_string(),
            e.directions.to_string(),
            num(e.max_abs_data),
            num(e.field_norm),
            opt(e.recovered_max_on_u),
            opt(e.recovery_error),
            opt(e.v_recovery_error),
            pass.to_string(),
        ]);
        checks.extend(own);
    };

    let zero = PhantomSpec::gaussian(2, 0, vec![0.0, 0.0], 1.0, vec![0.0]);
    let e = ucp_function_experiment("zero-field", &u, &zero, &dirs, &quad)?;
    let own = vec![
        CheckRow::below("ucp-zero-field", "max |Df|", e.max_abs_data, 1e-12),
        CheckRow::below(
            "ucp-zero-field",
            "f on U",
            e.recovered_max_on_u.unwrap_or(f64::NAN),
            1e-6,
        ),
    ];
    push(&e, own, &mut checks);

    let scalar_bump = PhantomSpec::potential_bump(2, 0, far.clone(), 1.0, 1.0);
    let e = ucp_function_experiment("scalar-bump-outside-u", &u, &scalar_bump, &dirs, &quad)?;
    let own = vec![
        CheckRow::above("ucp-function", "data detected", e.max_abs_data, 1e-6),
        CheckRow::below("ucp-function", "f on U", e.recovered_max_on_u.unwrap_or(f64::NAN), 1e-6),
    ];
    push(&e, own, &mut checks);

    let gaussian = PhantomSpec::gaussian(2, 0, vec![-3.8, 0.2], 1.0, vec![1.0]);
    let e = ucp_function_experiment("gaussian-recovery", &u, &gaussian, &dirs, &quad)?;
    let own = vec![CheckRow::below(
        "ucp-function",
        "recovery error",
        e.recovery_error.unwrap_or(f64::NAN),
        1e-4,
    )];
    push(&e, own, &mut checks);

    let bump = PhantomSpec::potential_bump(2, 1, far, 1.0, 1.0);
    // the bump's flat edges need a tighter panel test for exact cancellation
    let tight = QuadratureSpec {
        tail_tol: 1e-16,
        ..quad
    };
    let e = ucp_counterexample("gradient-counterexample", &u, &bump, &dirs, &tight)?;
    let own = vec![
        CheckRow::below("ucp-counterexample", "max |Df|", e.max_abs_data, 1e-8),
        CheckRow::above("ucp-counterexample", "field norm", e.field_norm, 0.1),
        CheckRow::below(
            "ucp-counterexample",
            "v recovery",
            e.v_recovery_error.unwrap_or(f64::NAN),
            1e-6,
        ),
    ];
    push(&e, own, &mut checks);

    Ok(SuiteReport {
        suite: Suite::Ucp,
        header: UCP_HEADER.iter().map(|s| s.to_string()).collect(),
        rows,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_roundtrip() {
        for s in [Suite::Identities, Suite::Stability, Suite::Ucp] {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("other".parse::<Suite>().is_err());
    }

    #[test]
    fn csv_layout() {
        let report = check_report(Suite::Identities, vec![CheckRow::below("a", "b c", 0.5, 1.0)]);
        assert_eq!(
            report.to_csv(),
            "check,case,value,bound,limit,pass\na,b c,0.5,below,1,true\n"
        );
        assert!(report.failures().is_empty());
    }
}
