use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use geodual::currents::GeodesicCurrent;
use geodual::group::SurfacePresentation;
use geodual::hyperbolic::PlanePoint;
use geodual::{Error, Result};
use serde_json::{json, Value};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "geodual", version, about = "Dual spaces of geodesic currents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dual distance between two points of the upper half-plane.
    Distance(DistanceArgs),
    /// Translation lengths of all classes up to a word bound.
    LengthSpectrum(SpectrumArgs),
    /// Lower bounds on the hyperbolicity constant over increasing radii.
    Delta(DeltaArgs),
    /// Dual graph of an atomic current around the basepoint.
    DualGraph(GraphArgs),
    /// Invariant suites on sampled points.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Preset name or path to a presentation file.
    #[arg(long)]
    presentation: Option<String>,
    /// Path to a current file, or inline JSON.
    #[arg(long)]
    current: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock time in the report.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct DistanceArgs {
    #[command(flatten)]
    common: Common,
    /// First point as `x,y`.
    #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
    from: String,
    /// Second point as `x,y`.
    #[arg(long, default_value = "0,2", allow_hyphen_values = true)]
    to: String,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 4)]
    word_bound: usize,
    /// Largest power in the homogeneity rows.
    #[arg(long, default_value_t = 5)]
    max_power: u32,
}

#[derive(Args, Debug)]
struct DeltaArgs {
    #[command(flatten)]
    common: Common,
    /// Truncation radii, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1.5,2,2.5,3")]
    radius: Vec<f64>,
    /// Grid points per angle for the Liouville search.
    #[arg(long, default_value_t = 12)]
    grid: usize,
}

#[derive(Args, Debug)]
struct GraphArgs {
    #[command(flatten)]
    common: Common,
    /// Radius of the window about the basepoint.
    #[arg(long, default_value_t = 2.0)]
    radius: f64,
    /// Also draw the arrangement and graph in the disk model.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Decomposition fixture name or path; its total replaces `--current`.
    #[arg(long)]
    decomposition: Option<String>,
    #[arg(long, default_value_t = 40)]
    samples: usize,
    /// Hyperbolic radius of the sampling ball about the basepoint.
    #[arg(long, default_value_t = 2.0)]
    radius: f64,
    #[arg(long, default_value_t = 3)]
    word_bound: usize,
    #[arg(long, default_value_t = 1e-2)]
    epsilon: f64,
}

pub(crate) struct Context {
    pub pres: Arc<SurfacePresentation>,
    pub seed: u64,
}

fn load_presentation(spec: Option<&str>, fallback: &str) -> Result<SurfacePresentation> {
    let name = spec.unwrap_or(fallback);
    match SurfacePresentation::preset(name) {
        Ok(p) => Ok(p),
        Err(Error::Config(_)) => SurfacePresentation::from_path(std::path::Path::new(name)),
        Err(e) => Err(e),
    }
}

pub(crate) fn load_current(spec: Option<&str>, pres: &Arc<SurfacePresentation>) -> Result<GeodesicCurrent> {
    let spec = spec.ok_or_else(|| Error::Config("--current is required".into()))?;
    if spec.trim_start().starts_with('{') {
        GeodesicCurrent::from_json_str(spec, pres.clone())
    } else {
        GeodesicCurrent::from_path(std::path::Path::new(spec), pres.clone())
    }
}

pub(crate) fn parse_point(text: &str) -> Result<PlanePoint> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [x, y] = parts[..] else {
        return Err(Error::Config(format!("point {text:?} is not of the form x,y")));
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Config(format!("bad coordinate {s:?}")));
    PlanePoint::new(num(x)?, num(y)?)
}

/// Usage and IO problems exit with 2, everything else with 1.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::FileNotFound(_) | Error::Io(_) | Error::Config(_) | Error::ParseWord(_) | Error::UnknownGenerator(_) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<(Value, bool, Option<PathBuf>)> {
    let started = Instant::now();
    let (common, name) = match &cli.command {
        Command::Distance(a) => (&a.common, "distance"),
        Command::LengthSpectrum(a) => (&a.common, "length-spectrum"),
        Command::Delta(a) => (&a.common, "delta"),
        Command::DualGraph(a) => (&a.common, "dual-graph"),
        Command::Verify(a) => (&a.common, "verify"),
    };
    let fallback = match &cli.command {
        Command::Verify(VerifyArgs {
            decomposition: Some(d), ..
        }) => commands::decomposition_presentation(d)?.unwrap_or_else(|| "punctured_torus".into()),
        _ => "punctured_torus".into(),
    };
    let pres = Arc::new(load_presentation(common.presentation.as_deref(), &fallback)?);
    let ctx = Context {
        pres,
        seed: common.seed,
    };
    let (params, result, passed) = match &cli.command {
        Command::Distance(a) => commands::distance(&ctx, a.common.current.as_deref(), &a.from, &a.to)?,
        Command::LengthSpectrum(a) => commands::length_spectrum(&ctx, a.common.current.as_deref(), a.word_bound, a.max_power)?,
        Command::Delta(a) => commands::delta(&ctx, a.common.current.as_deref(), &a.radius, a.grid)?,
        Command::DualGraph(a) => commands::dual_graph(&ctx, a.common.current.as_deref(), a.radius, a.svg.as_deref())?,
        Command::Verify(a) => commands::verify(
            &ctx,
            a.common.current.as_deref(),
            &commands::VerifyParams {
                decomposition: a.decomposition.clone(),
                samples: a.samples,
                radius: a.radius,
                word_bound: a.word_bound,
                epsilon: a.epsilon,
            },
        )?,
    };
    let wall_clock = common.timing.then(|| started.elapsed().as_secs_f64());
    let report = json!({
        "tool": "geodual",
        "version": env!("CARGO_PKG_VERSION"),
        "command": name,
        "presentation": ctx.pres.name(),
        "seed": ctx.seed,
        "parameters": params,
        "wall_clock_s": wall_clock,
        "passed": passed,
        "result": result,
    });
    Ok((report, passed, common.out.clone()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((report, passed, out)) => {
            let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, text) {
                        eprintln!("{}", json!({"error": "Io", "message": e.to_string()}));
                        return ExitCode::from(2);
                    }
                }
                None => print!("{text}"),
            }
            ExitCode::from(if passed { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
            ExitCode::from(exit_code(&e))
        }
    }
}
