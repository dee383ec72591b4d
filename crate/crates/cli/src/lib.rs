//! File formats, benchmark grids and the `robmix` command line on top of
//! `robmix-core`.
//!
//! Every command is a pure function of its flags, input files and seed, and
//! writes a JSON manifest next to its outputs that `robmix rerun` replays.

pub mod args;
mod commands;
pub mod error;
pub mod grid;
pub mod io;
pub mod manifest;
pub mod model;

use std::ffi::OsString;

use clap::Parser;

pub use args::{Cli, Command};
pub use commands::execute;
pub use error::{CliError, Result};

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
