//! Command-line front end for the `sbt` crate.
//!
//! Every command is deterministic. CSV and JSON carry 17 significant digits;
//! the table view rounds for reading only.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use clap::Parser;

pub use args::Cli;
pub use error::CliError;

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { CliError::USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = commands::execute(&cli).and_then(|r| {
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
        commands::emit(&r.text, r.output.as_deref())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
