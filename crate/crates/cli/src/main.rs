//! fracdiff: drive the solver and its diagnostics from JSON run
//! configurations.
//!
//! Logging goes to stderr under `FRACDIFF_LOG`; reports and artifacts
//! never carry timing, so identical invocations produce identical bytes.
//! Exit codes: 0 all checks passed, 2 config or usage error, 3 solver or
//! check failure, 4 out of the certified or resolvable regime.

mod artifacts;
mod config;
mod converge;
mod degiorgi;
mod oracle;
mod outcome;
mod solve;
mod threads;
mod verify;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::outcome::CmdResult;

#[derive(Parser)]
#[command(
    name = "fracdiff",
    version,
    about = "Fractional-time, fractional-space diffusion on the circle: solve and check"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// March a configured problem and write the trajectory artifacts.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Re-check a stored trajectory against one inequality suite.
    Verify {
        /// Trajectory container written by `solve`.
        trajectory: PathBuf,
        /// maxprinciple, energy, barriers, weakform, or uniqueness.
        #[arg(long)]
        suite: String,
        /// Optional config for tolerances and the energy seed.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Oscillation ladder, exponent fits, and level-set tables.
    Degiorgi {
        trajectory: PathBuf,
        /// Optional config for the diagnostic parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the configured refinement ladder and compare rungs.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Compare a run against the closed-form relaxation profile.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("FRACDIFF_LOG"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("fracdiff: {}", e.message);
            e.code
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> CmdResult<i32> {
    match cli.command {
        Cmd::Solve { config, out, threads } => solve::cmd_solve(&config, out, threads),
        Cmd::Verify {
            trajectory,
            suite,
            config,
            out,
            threads,
        } => verify::cmd_verify(&trajectory, &suite, config.as_deref(), out, threads),
        Cmd::Degiorgi {
            trajectory,
            config,
            out,
            threads,
        } => degiorgi::cmd_degiorgi(&trajectory, config.as_deref(), out, threads),
        Cmd::Converge { config, out, threads } => converge::cmd_converge(&config, out, threads),
        Cmd::Oracle { config, out, threads } => oracle::cmd_oracle(&config, out, threads),
    }
}
