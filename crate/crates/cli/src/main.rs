//! `assignflow`: image labeling by assignment flows.
//!
//! Exit status is 0 when the flow converged, 2 when it stopped at the
//! iteration cap and 1 on errors. `ASSIGNFLOW_THREADS` sets the number of
//! worker threads.

mod args;
mod output;
mod patch;
mod pnm;
mod rects;
mod vector;

use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use args::{InpaintArgs, LabelArgs, PatchArgs, RectangleArgs, SelfAssignArgs};
use output::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "assignflow", version, about = "Image labeling by assignment flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Label an image with prior vectors.
    Label(LabelArgs),
    /// Label an image whose masked pixels carry no data.
    Inpaint(InpaintArgs),
    /// Assign a patch dictionary and decompose the image.
    PatchLabel(PatchArgs),
    /// Select non-intersecting rectangles from a point pattern.
    Rectangles(RectangleArgs),
    /// Assign an image to a uniform grid of the RGB cube.
    Selfassign(SelfAssignArgs),
}

fn threads() -> Result<Option<usize>> {
    match std::env::var("ASSIGNFLOW_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .with_context(|| format!("ASSIGNFLOW_THREADS={v:?} is not a count"))?;
            if n == 0 {
                bail!("ASSIGNFLOW_THREADS must be positive");
            }
            Ok(Some(n))
        }
    }
}

fn dispatch(command: &Command) -> Result<RunManifest> {
    match command {
        Command::Label(a) => vector::cmd_label(a),
        Command::Inpaint(a) => vector::cmd_inpaint(a),
        Command::PatchLabel(a) => patch::cmd_patch_label(a),
        Command::Rectangles(a) => rects::cmd_rectangles(a),
        Command::Selfassign(a) => vector::cmd_selfassign(a),
    }
}

fn run(cli: &Cli) -> Result<RunManifest> {
    match threads()? {
        None => dispatch(&cli.command),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(|| dispatch(&cli.command)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(m) => {
            let status = if m.converged { "converged" } else { "stopped at the iteration cap" };
            println!(
                "{status} after {} iterations (entropy {:.3e}); outputs in {}",
                m.iterations, m.final_entropy, m.out_dir
            );
            if m.converged { ExitCode::SUCCESS } else { ExitCode::from(2) }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
