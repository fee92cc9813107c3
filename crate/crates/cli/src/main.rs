//! `esfem`: mesh tools, single solves, the cube benchmark study and the
//! self-verification suite.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "esfem", version, about = "Classical and edge-based smoothed FEM for electrostatics")]
struct Cli {
    /// TOML file with default values for any of the flags; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate, perturb, inspect or convert meshes.
    Mesh {
        #[command(subcommand)]
        action: MeshAction,
    },
    /// Solve one problem on one mesh with one or both methods.
    Solve(RunArgs),
    /// Cube benchmark on regular and perturbed meshes.
    BoxStudy(RunArgs),
    /// Patch tests and invariant checks.
    Verify,
}

#[derive(Debug, Subcommand)]
enum MeshAction {
    /// Structured mesh, optionally perturbed (`--out` .json or .vtk).
    Generate(RunArgs),
    /// Displace the interior nodes of `--mesh`.
    Perturb(RunArgs),
    /// Element ratio histogram of `--mesh`.
    Quality(RunArgs),
    /// Read `--mesh` (.msh or .json) and write `--out` (.json or .vtk).
    Convert(RunArgs),
}

/// Flags shared by the subcommands. Unset flags fall back to the config
/// file, then to the defaults listed in the README.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Mesh file (.json or .msh); a structured mesh is generated when absent.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// cylindrical2d, planar2d or cartesian3d [default: cartesian3d].
    #[arg(long)]
    pub mode: Option<String>,
    /// Cells per edge; comma separated (per axis, or one mesh each for box-study).
    #[arg(long, value_delimiter = ',')]
    pub divisions: Option<Vec<usize>>,
    /// Lower corner of the generated domain [default: 0,0,0].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub extent_min: Option<Vec<f64>>,
    /// Upper corner of the generated domain [default: 1,1,1].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub extent_max: Option<Vec<f64>>,
    /// Interior node perturbation magnitude in [0, 0.5).
    #[arg(long)]
    pub perturb: Option<f64>,
    /// Perturbation seed [default: 7].
    #[arg(long)]
    pub seed: Option<u64>,
    /// fem, esfem or both [default: both].
    #[arg(long)]
    pub method: Option<String>,
    /// Relative residual tolerance of the iterative solver [default: 1e-10].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output directory, or output file for the mesh subcommands.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Built-in problem: box or patch-affine.
    #[arg(long)]
    pub spec: Option<String>,
    /// Fill the wall_time column of CSV output.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug)]
pub struct CliError {
    pub category: String,
    pub message: String,
}

impl CliError {
    pub fn new(category: &str, message: impl Into<String>) -> Self {
        CliError {
            category: category.to_string(),
            message: message.into(),
        }
    }
}

impl From<esfem_core::Error> for CliError {
    fn from(e: esfem_core::Error) -> Self {
        CliError::new(e.category(), e.to_string())
    }
}

fn fail(err: &CliError) -> ExitCode {
    let message = err.message.replace('\n', " ");
    eprintln!("error[{}]: {}", err.category, message.trim());
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let file = match cli.config.as_deref().map(config::load).transpose() {
        Ok(c) => c.unwrap_or_default(),
        Err(e) => return fail(&e),
    };
    let result = match &cli.command {
        Command::Mesh { action } => match action {
            MeshAction::Generate(a) => commands::mesh_generate(a, &file),
            MeshAction::Perturb(a) => commands::mesh_perturb(a, &file),
            MeshAction::Quality(a) => commands::mesh_quality(a, &file),
            MeshAction::Convert(a) => commands::mesh_convert(a, &file),
        },
        Command::Solve(a) => commands::solve(a, &file),
        Command::BoxStudy(a) => commands::box_study(a, &file),
        Command::Verify => commands::verify(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
