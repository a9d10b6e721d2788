//! Command-line front end: model generation, single-shot estimation,
//! experiment grids and plot-data export.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical or I/O failure,
//! 4 every simulation cell failed.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;

pub use config::{CommandKind, RunConfig};
pub use error::{CliError, CliResult};

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let parsed = match cli::Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match parsed.command.resolve().and_then(|cfg| commands::run(&cfg)) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for m in &outcome.messages {
                println!("{m}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
