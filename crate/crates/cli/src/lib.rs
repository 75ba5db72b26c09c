//! Command-line driver for the `wabc` library.
//!
//! Every command is a pure function of its options, its root seed and its
//! input files; sub-seeds are derived from the root by labeled hashing and
//! recorded in the run directory's `manifest.json`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.

pub mod args;
pub mod artifacts;
pub mod bench;
pub mod commands;
pub mod error;
pub mod scans;

use std::ffi::OsString;

use clap::{CommandFactory, FromArgMatches};

use args::{resolve, Cli, Command};
pub use error::{CliError, CliResult};

fn dispatch(cli: &Cli, matches: &clap::ArgMatches) -> CliResult<()> {
    let sub = matches.subcommand().map(|(_, m)| m).expect("a subcommand is required");
    match &cli.command {
        Command::Gen(a) => commands::gen(&resolve(&a.opts, sub, a.config.as_deref())?),
        Command::Fit(a) => commands::fit(&resolve(&a.opts, sub, a.config.as_deref())?),
        Command::Eval(a) => commands::eval(&resolve(&a.opts, sub, a.config.as_deref())?),
        Command::Bench(a) => bench::bench(&resolve(&a.opts, sub, a.config.as_deref())?),
        Command::BiasScan(a) => scans::bias(&resolve(&a.opts, sub, a.config.as_deref())?),
        Command::AcceptScan(a) => scans::accept(&resolve(&a.opts, sub, a.config.as_deref())?),
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let parsed = Cli::command().try_get_matches_from(argv).and_then(|m| Cli::from_arg_matches(&m).map(|c| (c, m)));
    let (cli, matches) = match parsed {
        Ok(p) => p,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli, &matches) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
