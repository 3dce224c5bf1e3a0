//! `orbitlab`: run orbit solves, inequality sweeps and hypothesis checks
//! from a TOML config or a bundled example.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use orbitlab_core::contraction::ZeroMode;
use orbitlab_core::Error;

#[derive(Debug, Parser)]
#[command(name = "orbitlab", version, about = "Common fixed points of three selfmaps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the orbit from each start point and report the common fixed point.
    Solve(RunArgs),
    /// Check the contractive inequality on every ordered pair of a grid.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        form: FormArgs,
    },
    /// Weak commutativity, compatibility, type (A) and reciprocal continuity.
    Hypotheses(RunArgs),
    /// Validate the control function and tabulate its iterate decay.
    PhiCheck(RunArgs),
    /// Fixed points of a map family and their limit.
    Seq(RunArgs),
    /// Check bundled examples against their recorded outcomes.
    CorpusVerify {
        /// Bundle to verify; repeat for several. Default: all.
        #[arg(long = "example", value_name = "NAME")]
        examples: Vec<String>,
        /// Verify the expectations of a config file instead.
        #[arg(long, value_name = "PATH", conflicts_with = "examples")]
        config: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(long, value_name = "N")]
        jobs: Option<usize>,
    },
    /// List bundled examples.
    List,
    /// Print a bundled example as a config file.
    Export {
        #[arg(long, value_name = "NAME")]
        example: String,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
struct RunArgs {
    #[arg(
        long,
        value_name = "PATH",
        conflicts_with = "example",
        required_unless_present = "example"
    )]
    config: Option<PathBuf>,
    #[arg(long, value_name = "NAME")]
    example: Option<String>,
    /// Start point; a decimal or a fraction like 3/4.
    #[arg(long, value_name = "R")]
    x0: Option<String>,
    /// Main tolerance of the command.
    #[arg(long, value_name = "R")]
    tol: Option<f64>,
    #[arg(long, value_name = "N")]
    max_n: Option<usize>,
    #[arg(long, value_name = "MODE")]
    zero_mode: Option<ZeroMode>,
    /// Sweep grid size.
    #[arg(long, value_name = "N")]
    grid: Option<usize>,
    /// Write one report file per check (and CSV traces) here.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
struct FormArgs {
    /// Inequality form, e.g. lambda-max or phi-rational-two-map.
    #[arg(long, value_name = "NAME")]
    form: Option<String>,
    #[arg(long, value_name = "R")]
    lambda: Option<f64>,
    #[arg(long, value_name = "R")]
    alpha: Option<f64>,
    #[arg(long, value_name = "R")]
    beta: Option<f64>,
    #[arg(long, value_name = "R")]
    gamma: Option<f64>,
}

fn exit_code(e: &Error) -> u8 {
    if e.is_runtime() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("orbitlab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
