use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

use commands::Failure;

#[derive(Parser)]
#[command(name = "divray", version, about = "Divergent beam tensor tomography pipelines")]
struct Cli {
    /// Worker threads for data-parallel stages (default: all cores).
    #[arg(long, env = "DIVRAY_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Pointwise,
    SpectralVec,
    Spectral2t,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Identities,
    Stability,
    Ucp,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a phantom spec (JSON) on a grid.
    Phantom {
        spec: PathBuf,
        out: PathBuf,
        #[command(flatten)]
        grid: commands::GridArgs,
    },
    /// Beam samples from every grid node of a field container or phantom spec.
    Forward {
        input: PathBuf,
        out: PathBuf,
        /// Integer moment k of the weight t^k.
        #[arg(long, conflicts_with = "s", required_unless_present = "s")]
        weight: Option<u32>,
        /// Fractional exponent s of the weight t^(2s-1).
        #[arg(long)]
        s: Option<f64>,
        /// Expected tensor order of the input.
        #[arg(long)]
        m: Option<usize>,
        /// Direction list (JSON array or one vector per line), or `pointwise`
        /// for the set the pointwise method needs.
        #[arg(long, conflicts_with = "n_angles")]
        directions: Option<String>,
        /// Equispaced planar directions.
        #[arg(long)]
        n_angles: Option<usize>,
        #[command(flatten)]
        grid: commands::GridArgs,
        /// Per-ray accuracy target of the quadrature.
        #[arg(long)]
        tail_tol: Option<f64>,
        /// Write the forward quality report (JSON) here.
        #[arg(long)]
        quality: Option<PathBuf>,
    },
    /// Spherical averages of fractional beam samples.
    Average {
        beams: PathBuf,
        out: PathBuf,
        /// Only this rank (default: all ranks 0..=m).
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Invert averages (spectral) or integer-weight beams (pointwise).
    Reconstruct {
        input: PathBuf,
        out: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Write the reconstruction report (JSON) here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Reference field container or phantom spec for error reporting.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Boundary ring excluded from the error mask.
        #[arg(long)]
        ring: Option<usize>,
        /// Relative L2 threshold; exceeding it exits with code 3.
        #[arg(long)]
        max_rel_l2: Option<f64>,
    },
    /// Run a verification suite and emit CSV.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also emit the rows as JSON lines.
        #[arg(long)]
        jsonl: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print `H^{t,p}` norms of a field, reconstruction or average container.
    Norms {
        input: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Validation(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Phantom { spec, out, grid } => commands::phantom(&spec, &out, &grid),
        Command::Forward {
            input,
            out,
            weight,
            s,
            m,
            directions,
            n_angles,
            grid,
            tail_tol,
            quality,
        } => commands::forward(&commands::ForwardArgs {
            input,
            out,
            weight,
            s,
            m,
            directions,
            n_angles,
            grid,
            tail_tol,
            quality,
        }),
        Command::Average { beams, out, rank, s, m } => commands::average(&beams, &out, rank, s, m),
        Command::Reconstruct {
            input,
            out,
            method,
            report,
            reference,
            ring,
            max_rel_l2,
        } => commands::reconstruct(&commands::ReconstructArgs {
            input,
            out,
            method,
            report,
            reference,
            ring,
            max_rel_l2,
        }),
        Command::Verify {
            suite,
            out,
            jsonl,
            seed,
        } => commands::verify(suite, out.as_deref(), jsonl.as_deref(), seed),
        Command::Norms { input, t, p } => commands::norms(&input, t, p),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Quality(msg)) => {
            eprintln!("quality failure: {msg}");
            ExitCode::from(3)
        }
    }
}
