//! Command-line driver: configuration, presets, output writers and the
//! exit-status contract.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::stepper::{run_simulation, NonconvergencePolicy};
pub use config::{initial_data, parse_config, InitialData, LawKind, MeshSpec, Projection, RunConfig};
pub use output::{read_csv, write_csv, write_diagnostics_csv, write_vtk, Snapshot};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_BLOWUP: i32 = 4;
pub const EXIT_IO: i32 = 5;

pub const OUT_DIR_ENV: &str = "VDW_PME_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "vdw-pme",
    version,
    about = "Cohesive nonlinear diffusion solved as a porous medium equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulation from a config file or a shipped preset.
    Run(RunArgs),
    /// Print a shipped preset file.
    Preset { name: String },
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Config file (flat `key = value` text).
    pub config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Write a snapshot every N steps (0: first and last only).
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    /// Use a shipped preset instead of a config file.
    #[arg(long, value_parser = config::PRESET_NAMES)]
    pub preset: Option<String>,
    /// Mesh width h = 2^-K on both axes.
    #[arg(long)]
    pub h_exp: Option<u32>,
    /// Abort when Picard hits its iteration limit instead of continuing.
    #[arg(long)]
    pub strict_picard: bool,
    /// Skip VTK files.
    #[arg(long)]
    pub no_vtk: bool,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::InvalidArgument(_) => EXIT_CONFIG,
        Error::BlowUp { .. } => EXIT_BLOWUP,
        Error::SingularPivot { .. } | Error::LinearSolve { .. } | Error::PicardStalled { .. } => EXIT_SOLVER,
        Error::Io { .. } => EXIT_IO,
    }
}

/// Resolves the arguments into a validated config; returns it with warnings.
pub fn resolve_config(args: &RunArgs) -> Result<(RunConfig, Vec<String>), Error> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), None) => parse_config(path)?,
        (None, Some(name)) => RunConfig::preset(name)?,
        (Some(_), Some(_)) => {
            return Err(Error::InvalidArgument(
                "give either a config file or --preset, not both".into(),
            ))
        }
        (None, None) => return Err(Error::InvalidArgument("missing config file (or --preset NAME)".into())),
    };
    if let Some(k) = args.h_exp {
        cfg.mesh = MeshSpec::HExponent(k);
    }
    if let Some(n) = args.snapshot_every {
        cfg.snapshot_every = n;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if args.strict_picard {
        cfg.picard.policy = NonconvergencePolicy::Abort;
    }
    if args.no_vtk {
        cfg.write_vtk = false;
    }
    let warnings = cfg.validate()?;
    Ok((cfg, warnings))
}

fn write_outputs(cfg: &RunConfig, out: &crate::stepper::SimulationOutput) -> Result<(), Error> {
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_diagnostics_csv(&out.records, &dir.join("diagnostics.csv"))?;
    output::write_supports_csv(&cfg.thetas, &out.records, &out.supports, &dir.join("supports.csv"))?;
    for s in &out.snapshots {
        write_csv(s, &dir.join(s.csv_name()))?;
        if cfg.write_vtk {
            write_vtk(s, &dir.join(s.vtk_name()))?;
        }
    }
    Ok(())
}

/// Executes `run`; returns the process exit code.
pub fn run(args: &RunArgs) -> i32 {
    let (cfg, warnings) = match resolve_config(args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let out = match run_simulation(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    if let Err(e) = write_outputs(&cfg, &out) {
        eprintln!("error: {e}");
        return exit_code(&e);
    }
    let last = out.records.last().expect("initial record is always present");
    let unconverged = out.records.iter().filter(|r| !r.converged).count();
    println!(
        "{}: {} steps, t = {:e}, c in [{:.6e}, {:.6e}], mass {:.6e}, support {:.6e}, max picard {}, unconverged {}",
        cfg.name,
        last.step,
        last.time,
        last.c_min,
        last.c_max,
        last.mass,
        last.support_area,
        out.records.iter().map(|r| r.picard_iterations).max().unwrap_or(0),
        unconverged
    );
    println!("output written to {}", display(&cfg.output_dir));
    match &out.stopped {
        None => EXIT_OK,
        Some(e) => {
            eprintln!("stopped early: {e}");
            exit_code(e)
        }
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

pub fn main_with(cli: Cli) -> i32 {
    match cli.command {
        Command::Run(args) => run(&args),
        Command::Preset { name } => match config::preset_source(&name) {
            Some(src) => {
                print!("{src}");
                EXIT_OK
            }
            None => {
                eprintln!(
                    "error: unknown preset '{name}' (available: {})",
                    config::PRESET_NAMES.join(", ")
                );
                EXIT_CONFIG
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct() {
        let cases = [
            (Error::InvalidArgument("x".into()), EXIT_CONFIG),
            (
                Error::Config {
                    path: "a".into(),
                    line: 1,
                    key: "k".into(),
                    message: "m".into(),
                },
                EXIT_CONFIG,
            ),
            (Error::BlowUp { step: 3 }, EXIT_BLOWUP),
            (Error::SingularPivot { step: 0 }, EXIT_SOLVER),
            (
                Error::LinearSolve {
                    step: 1,
                    iteration: 1,
                    reason: "r".into(),
                },
                EXIT_SOLVER,
            ),
            (
                Error::PicardStalled {
                    step: 1,
                    iterations: 40,
                    error: 1.0,
                },
                EXIT_SOLVER,
            ),
        ];
        for (e, code) in cases {
            assert_eq!(exit_code(&e), code);
        }
        let codes = [EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_BLOWUP, EXIT_IO];
        for (i, a) in codes.iter().enumerate() {
            assert!(codes[i + 1..].iter().all(|b| a != b));
        }
    }
}
