//! Command-line front end: DSL checks, plan synthesis, experiment runs and
//! queueing self-checks.

mod check;
mod oracle;
mod run;
mod scenario;
mod synth;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use check::cmd_check;
pub use oracle::{cmd_oracle, OracleArgs};
pub use run::{cmd_run, ExperimentSpec, RunArgs, Sweep};
pub use scenario::{load_scenario, Overrides};
pub use synth::{cmd_synth, SynthArgs};

/// Output schema of every file the CLI writes.
pub const CLI_SCHEMA_VERSION: u32 = 1;

pub mod exit {
    pub const OK: i32 = 0;
    /// Validation issues, simulation errors or oracle breaches.
    pub const FAILURE: i32 = 1;
    pub const IO: i32 = 2;
    pub const NO_FEASIBLE_PLAN: i32 = 3;
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum AccelArg {
    None,
    Net,
    Mem,
    All,
}

impl AccelArg {
    pub fn config(self) -> hivesim::synth::AccelConfig {
        hivesim::synth::AccelConfig {
            network_accel: matches!(self, AccelArg::Net | AccelArg::All),
            remote_mem: matches!(self, AccelArg::Mem | AccelArg::All),
        }
    }
}

/// Scenario knobs shared by `synth` and `run`.
#[derive(Clone, Debug, Default, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub fps: Option<f64>,
    #[arg(long = "frame-bytes")]
    pub frame_bytes: Option<u64>,
    #[arg(long, value_enum)]
    pub accel: Option<AccelArg>,
    #[arg(long = "keepalive-s")]
    pub keepalive_s: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(name = "hivesim", about = "Swarm offloading simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Parse and validate a task-graph program.
    Check { path: PathBuf },
    /// Enumerate, profile and rank placement plans.
    Synth(SynthArgs),
    /// Run one or more simulations and write metrics.
    Run(RunArgs),
    /// Check the simulator against closed-form queueing results.
    Oracle(OracleArgs),
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // help and version go to stdout with success
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return exit::IO;
            }
            let _ = write!(out, "{}", e.render());
            return exit::OK;
        }
    };
    match cli.cmd {
        Cmd::Check { path } => cmd_check(&path, out, err),
        Cmd::Synth(a) => cmd_synth(&a, out, err),
        Cmd::Run(a) => cmd_run(&a, out, err),
        Cmd::Oracle(a) => cmd_oracle(&a, out, err),
    }
}
