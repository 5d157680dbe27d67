//! `hopflab`: command-line front end for the hopflab-core numerics.
//!
//! Exit codes: 0 on success, 1 when a check fails, 2 on usage or input errors.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "hopflab", version, about = "Hopf differentials, trajectories and minimal deformations")]
pub struct Cli {
    /// Directory that every input and output path is resolved against.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample an example map on a lattice and write a MapGrid JSON.
    Example(ExampleArgs),
    /// Trace a vertical or horizontal trajectory of a Hopf differential.
    Trace(TraceArgs),
    /// Dyadic harmonic-replacement pass over a MapGrid.
    Refine(RefineArgs),
    /// Solve the radial obstacle problem between annuli.
    Minimize(MinimizeArgs),
    /// Run verification suites.
    Verify(VerifyArgs),
    /// Fourier spectrum of a boundary trace, or a random polynomial batch.
    Fourier(FourierArgs),
    /// Render trajectory CSVs and MapGrid JSONs as SVG.
    Plot(PlotArgs),
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum MapId {
    Butterfly,
    Hammering,
    PiecewiseLinear,
    PowerLog,
}

/// Parameters shared by every command that names an example map.
#[derive(Args, Serialize, Clone, Copy, Debug)]
pub struct MapParams {
    /// Exponent of the power-log family.
    #[arg(long, default_value_t = 4.0)]
    pub p: f64,
    /// Inner radius of the hammering annulus.
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    /// Outer radius of the hammering annulus.
    #[arg(long = "R", default_value_t = 2.0)]
    #[serde(rename = "R")]
    pub big_r: f64,
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum LatticeArg {
    Polar,
    Cartesian,
}

#[derive(Args, Serialize, Debug)]
pub struct ExampleArgs {
    #[arg(long)]
    pub id: MapId,
    #[command(flatten)]
    #[serde(flatten)]
    pub map: MapParams,
    /// Rings (polar) or nodes per side (cartesian).
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Angular nodes of a polar lattice; defaults to 2n.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_theta: Option<usize>,
    #[arg(long, value_enum, default_value_t = LatticeArg::Polar)]
    pub lattice: LatticeArg,
    #[arg(long, default_value = "field.json")]
    pub out: PathBuf,
    /// Also write the energy density as a CSV with columns x, y, value.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug)]
pub struct TraceArgs {
    /// `one`, an example id, or a MapGrid JSON whose sampled φ is traced.
    #[arg(long)]
    pub phi: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub map: MapParams,
    /// Starting point, e.g. `0.7+0.1i`.
    #[arg(long, allow_hyphen_values = true)]
    pub seed: String,
    #[arg(long, default_value = "vertical")]
    pub kind: String,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// φ-length cap per direction.
    #[arg(long, default_value_t = 100.0)]
    pub max_length: f64,
    #[arg(long, default_value = "traj.csv")]
    pub out: PathBuf,
}

#[derive(Args, Serialize, Debug)]
pub struct RefineArgs {
    /// MapGrid JSON to refine.
    pub grid: PathBuf,
    /// Target domain, e.g. `annulus:1,1.25`.
    #[arg(long)]
    pub target: String,
    #[arg(long, default_value_t = 4)]
    pub level: u32,
    #[arg(long, default_value = "refine.json")]
    pub report: PathBuf,
    /// Also write the refined grid.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug)]
pub struct MinimizeArgs {
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    #[arg(long = "R", default_value_t = 2.0)]
    #[serde(rename = "R")]
    pub big_r: f64,
    #[arg(long, default_value_t = 2000)]
    pub nodes: usize,
    /// Outer target radius; defaults to the Nitsche radius ½(R + 1/R).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Angular nodes of the lifted map.
    #[arg(long, default_value_t = 256)]
    pub n_theta: usize,
    #[arg(long, default_value = "profile.csv")]
    pub out: PathBuf,
    #[arg(long, default_value = "min.json")]
    pub report: PathBuf,
}

#[derive(Args, Serialize, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// RNG seed; `HOPFLAB_SEED` takes precedence.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "report.json")]
    pub report: PathBuf,
    /// Print one line per check.
    #[arg(long)]
    #[serde(skip)]
    pub verbose: bool,
}

#[derive(Args, Serialize, Debug)]
pub struct FourierArgs {
    #[arg(long, default_value = "butterfly")]
    pub map: MapId,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: MapParams,
    /// Radius of the sampled circle about the origin.
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
    #[arg(long, default_value_t = 32)]
    pub bandwidth: usize,
    /// Run a batch of this many random trigonometric polynomials instead.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random: Option<usize>,
    /// RNG seed for `--random`; `HOPFLAB_SEED` takes precedence.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "fourier.json")]
    pub out: PathBuf,
}

#[derive(Args, Serialize, Debug)]
pub struct PlotArgs {
    /// Trajectory CSVs and MapGrid JSONs.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Map whose image curves are drawn in a second panel. Defaults to the
    /// map named in the trajectory configs.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<MapId>,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: MapParams,
    /// Lattice lines drawn per direction for MapGrid inputs.
    #[arg(long, default_value_t = 16)]
    pub lines: usize,
    #[arg(long, default_value = "plot.svg")]
    pub out: PathBuf,
}

pub enum Outcome {
    Ok,
    CheckFailed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
