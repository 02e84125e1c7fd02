//! One function per subcommand; each wraps a single library operation.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use clap::Args;
use divray::averaging::{average_by_quadrature, averages_by_quadrature, AverageField, Provenance};
use divray::raytransform::{forward_grid, forward_sampled};
use divray::reconstruct::{
    compare_fields, missing_directions, reconstruct_2tensor, reconstruct_from_weighted, reconstruct_vector,
    report_without_reference, required_directions, DEFAULT_RING,
};
use divray::tfld::{Container, Role};
use divray::verify::{run_suite, Suite};
use divray::{
    DirectionSet, Grid, PhantomSpec, QuadratureSpec, RayWeight, ReconReport, SpectralGrid, SymTensorField,
    ZeroModePolicy,
};

use crate::{Method, SuiteArg};

#[derive(Debug)]
pub enum Failure {
    /// Exit code 2.
    Validation(String),
    /// Exit code 3.
    Quality(String),
}

impl From<divray::Error> for Failure {
    fn from(e: divray::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn fail(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

#[derive(Args, Debug, Clone, Default)]
pub struct GridArgs {
    /// Nodes per axis (default: the spec's `grid.size`, else 256).
    #[arg(long)]
    pub size: Option<usize>,
    /// Box side length (default: the spec's `grid.length`, else 16).
    #[arg(long)]
    pub length: Option<f64>,
}

const DEFAULT_SIZE: usize = 256;
const DEFAULT_LENGTH: f64 = 16.0;

/// A phantom spec file: the phantom fields plus an optional
/// `"grid": {"size": N, "length": L}` entry.
struct SpecFile {
    phantom: PhantomSpec,
    size: Option<usize>,
    length: Option<f64>,
}

fn read_spec(path: &Path) -> Result<SpecFile, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    let grid = value.as_object_mut().and_then(|o| o.remove("grid"));
    let phantom: PhantomSpec = serde_json::from_value(value).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    phantom.validate()?;
    let size = grid
        .as_ref()
        .and_then(|g| g.get("size"))
        .and_then(|v| v.as_u64())
        .map(|v| v as usize);
    let length = grid.as_ref().and_then(|g| g.get("length")).and_then(|v| v.as_f64());
    Ok(SpecFile { phantom, size, length })
}

fn spec_grid(spec: &SpecFile, args: &GridArgs) -> Result<Grid, Failure> {
    let size = args.size.or(spec.size).unwrap_or(DEFAULT_SIZE);
    let length = args.length.or(spec.length).unwrap_or(DEFAULT_LENGTH);
    Ok(Grid::cube(spec.phantom.dim, size, length)?)
}

fn is_container(path: &Path) -> Result<bool, Failure> {
    let mut magic = [0u8; 4];
    let mut file = std::fs::File::open(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    Ok(std::io::Read::read_exact(&mut file, &mut magic).is_ok() && &magic == divray::tfld::MAGIC)
}

fn read_container(path: &Path) -> Result<Container, Failure> {
    Container::read_file(path).map_err(|e| fail(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CmdResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| fail(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| fail(format!("{}: {e}", path.display())))
}

/// Collects flag-versus-metadata disagreements into one message.
#[derive(Default)]
struct MetaDiff(Vec<String>);

impl MetaDiff {
    fn check<T: PartialEq + Display>(&mut self, name: &str, flag: Option<T>, found: T) {
        if let Some(flag) = flag {
            if flag != found {
                self.0.push(format!("{name}: flag {flag}, input {found}"));
            }
        }
    }

    fn finish(self) -> CmdResult {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(fail(format!("metadata mismatch ({})", self.0.join("; "))))
        }
    }
}

pub fn phantom(spec: &Path, out: &Path, grid: &GridArgs) -> CmdResult {
    let spec = read_spec(spec)?;
    let field = spec.phantom.sample_on_grid(&spec_grid(&spec, grid)?)?;
    Container::from_field(&field, Role::Field, None).write_file(out)?;
    Ok(())
}

pub struct ForwardArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    pub weight: Option<u32>,
    pub s: Option<f64>,
    pub m: Option<usize>,
    pub directions: Option<String>,
    pub n_angles: Option<usize>,
    pub grid: GridArgs,
    pub tail_tol: Option<f64>,
    pub quality: Option<PathBuf>,
}

fn read_directions(arg: &str, dim: usize, m: usize) -> Result<DirectionSet, Failure> {
    if arg == "pointwise" {
        return Ok(DirectionSet::from_directions(required_directions(dim, m))?);
    }
    let text = std::fs::read_to_string(arg).map_err(|e| fail(format!("{arg}: {e}")))?;
    let dirs: Vec<Vec<f64>> = if text.trim_start().starts_with('[') {
        serde_json::from_str(&text).map_err(|e| fail(format!("{arg}: {e}")))?
    } else {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split_whitespace().map(str::parse).collect::<Result<Vec<f64>, _>>())
            .collect::<Result<_, _>>()
            .map_err(|e| fail(format!("{arg}: {e}")))?
    };
    let set = DirectionSet::from_directions(dirs)?;
    if set.dim != dim {
        return Err(fail(format!("directions have dimension {}, field has {dim}", set.dim)));
    }
    Ok(set)
}

pub fn forward(args: &ForwardArgs) -> CmdResult {
    let weight = match (args.weight, args.s) {
        (Some(k), None) => RayWeight::Moment(k),
        (None, Some(s)) => RayWeight::Fractional(s),
        _ => return Err(fail("give exactly one of --weight and --s")),
    };
    weight.validate()?;
    let mut quad = QuadratureSpec::default();
    if let Some(tol) = args.tail_tol {
        quad.tail_tol = tol;
    }
    let (dim, order) = if is_container(&args.input)? {
        let c = read_container(&args.input)?;
        (c.header.n, c.header.m)
    } else {
        let spec = read_spec(&args.input)?;
        (spec.phantom.dim, spec.phantom.order)
    };
    let mut diff = MetaDiff::default();
    diff.check("m", args.m, order);
    diff.finish()?;
    let dirs = match (&args.directions, args.n_angles) {
        (Some(d), _) => read_directions(d, dim, order)?,
        (None, Some(n)) if dim == 2 => DirectionSet::equispaced_2d(n)?,
        (None, Some(_)) => return Err(fail("--n-angles needs a planar field")),
        (None, None) => DirectionSet::default_for(dim)?,
    };
    let (beams, report) = if is_container(&args.input)? {
        let field = read_container(&args.input)?.to_field()?;
        forward_sampled(&field, &field.grid.clone(), &dirs, weight, &quad)?
    } else {
        let spec = read_spec(&args.input)?;
        let grid = spec_grid(&spec, &args.grid)?;
        forward_grid(&spec.phantom.compile()?, &grid, &dirs, weight, &quad)?
    };
    Container::from_beams(&beams)?.write_file(&args.out)?;
    if let Some(path) = &args.quality {
        write_json(path, &report)?;
    }
    if report.flagged {
        return Err(Failure::Quality(format!(
            "{} sources lie outside a field that does not decay at its boundary (boundary {:e}, peak {:e})",
            report.sources_outside_grid, report.boundary_magnitude, report.peak_magnitude
        )));
    }
    Ok(())
}

pub fn average(beams: &Path, out: &Path, rank: Option<usize>, s: Option<f64>, m: Option<usize>) -> CmdResult {
    let c = read_container(beams)?;
    let beams = c.to_beams()?;
    let found_s = match beams.weight {
        RayWeight::Fractional(s) => s,
        other => {
            return Err(fail(format!(
                "averages need fractional beam samples, container has {other:?}"
            )))
        }
    };
    let mut diff = MetaDiff::default();
    diff.check("s", s, found_s);
    diff.check("m", m, beams.order);
    diff.finish()?;
    let avg = match rank {
        Some(k) if k > beams.order => return Err(fail(format!("rank {k} exceeds tensor order {}", beams.order))),
        Some(k) => AverageField {
            m: beams.order,
            s: found_s,
            ranks: vec![average_by_quadrature(&beams, k)?],
            provenance: Provenance::Quadrature,
        },
        None => averages_by_quadrature(&beams)?,
    };
    Container::from_averages(&avg).write_file(out)?;
    Ok(())
}

pub struct ReconstructArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    pub method: Method,
    pub report: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub ring: Option<usize>,
    pub max_rel_l2: Option<f64>,
}

/// Full averages from an average container or fractional beams.
fn load_averages(c: &Container, m: usize) -> Result<AverageField, Failure> {
    let avg = match c.role {
        Role::Avg => c.to_averages()?,
        Role::Beam => averages_by_quadrature(&c.to_beams()?)?,
        other => {
            return Err(fail(format!(
                "spectral methods need averages or beams, container role is {other:?}"
            )))
        }
    };
    let mut diff = MetaDiff::default();
    diff.check("m", Some(m), avg.m);
    diff.finish()?;
    let ranks: Vec<usize> = avg.ranks.iter().map(|r| r.order).collect();
    if ranks != (0..=m).collect::<Vec<_>>() {
        return Err(fail(format!(
            "spectral inversion needs ranks 0..={m}, container has {ranks:?}"
        )));
    }
    Ok(avg)
}

/// Reference sampled on (or trimmed to) the reconstruction grid.
fn load_reference(path: &Path, recon: &SymTensorField) -> Result<SymTensorField, Failure> {
    if !is_container(path)? {
        let spec = read_spec(path)?;
        return Ok(spec.phantom.sample_on_grid(&recon.grid)?);
    }
    let field = read_container(path)?.to_field()?;
    if field.grid.same_geometry(&recon.grid) {
        return Ok(field);
    }
    let extra = field.grid.sizes[0].saturating_sub(recon.grid.sizes[0]);
    if extra % 2 == 0 && extra > 0 {
        let trimmed = field.trimmed(extra / 2)?;
        if trimmed.grid.same_geometry(&recon.grid) {
            return Ok(trimmed);
        }
    }
    Err(fail("reference grid does not contain the reconstruction grid"))
}

pub fn reconstruct(args: &ReconstructArgs) -> CmdResult {
    let c = read_container(&args.input)?;
    let (recon, name, zero_mode, default_ring, default_limit) = match args.method {
        Method::Pointwise => {
            let beams = c.to_beams()?;
            let missing = missing_directions(&beams.directions.directions, beams.dim, beams.order);
            if !missing.is_empty() {
                return Err(fail(format!("pointwise method lacks directions {missing:?}")));
            }
            (reconstruct_from_weighted(&beams)?, "pointwise", false, 0, 1e-2)
        }
        Method::SpectralVec | Method::Spectral2t => {
            let m = if args.method == Method::SpectralVec { 1 } else { 2 };
            let avg = load_averages(&c, m)?;
            let g = SpectralGrid::new(avg.grid().clone(), ZeroModePolicy::Zero)?;
            if m == 1 {
                (reconstruct_vector(&g, &avg)?, "spectral-vec", true, DEFAULT_RING, 5e-2)
            } else {
                (reconstruct_2tensor(&g, &avg)?, "spectral-2t", true, DEFAULT_RING, 8e-2)
            }
        }
    };
    Container::from_field(&recon, Role::Recon, Some(name)).write_file(&args.out)?;
    let ring = args.ring.unwrap_or(default_ring);
    let report: ReconReport = match &args.reference {
        Some(path) => compare_fields(name, &recon, &load_reference(path, &recon)?, ring, zero_mode)?,
        None => report_without_reference(name, &recon, ring, zero_mode),
    };
    if let Some(path) = &args.report {
        write_json(path, &report)?;
    }
    let limit = args.max_rel_l2.unwrap_or(default_limit);
    match report.relative_l2 {
        Some(err) if err.is_nan() || err >= limit => {
            Err(Failure::Quality(format!("relative L2 error {err:e} exceeds {limit:e}")))
        }
        _ => Ok(()),
    }
}

pub fn verify(suite: SuiteArg, out: Option<&Path>, jsonl: Option<&Path>, seed: u64) -> CmdResult {
    let suite = match suite {
        SuiteArg::Identities => Suite::Identities,
        SuiteArg::Stability => Suite::Stability,
        SuiteArg::Ucp => Suite::Ucp,
    };
    let report = run_suite(suite, seed)?;
    match out {
        Some(path) => std::fs::write(path, report.to_csv()).map_err(|e| fail(format!("{}: {e}", path.display())))?,
        None => print!("{}", report.to_csv()),
    }
    if let Some(path) = jsonl {
        std::fs::write(path, report.to_jsonl()).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    }
    let failures = report.failures();
    eprintln!("{suite}: {} checks, {} failed", report.checks.len(), failures.len());
    for f in &failures {
        eprintln!("  FAIL {} [{}]: {:e} vs limit {:e}", f.check, f.case, f.value, f.limit);
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Quality(format!("{} {suite} checks failed", failures.len())))
    }
}

pub fn norms(input: &Path, t: f64, p: f64) -> CmdResult {
    let c = read_container(input)?;
    let fields = match c.role {
        Role::Field | Role::Recon => vec![c.to_field()?],
        Role::Avg => c.to_averages()?.ranks,
        Role::Beam => return Err(fail("norms need a field, reconstruction or average container")),
    };
    let g = SpectralGrid::new(fields[0].grid.clone(), ZeroModePolicy::Zero)?;
    for f in &fields {
        let norm = g.tensor_norm(f, t, p)?;
        if c.role == Role::Avg {
            println!("rank {} H^({t},{p}) norm: {norm}", f.order);
        } else {
            println!("H^({t},{p}) norm: {norm}");
        }
    }
    Ok(())
}
