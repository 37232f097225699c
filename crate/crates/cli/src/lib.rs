//! Command-line front end: CSV ingestion, configuration, dispatch and
//! report emission.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 validation error, 3 numerical
//! failure. Failures print a JSON error object on stderr and leave no
//! output files behind.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod report;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use args::{Cli, Command};
pub use commands::Output;
pub use error::{CliError, CliResult};
pub use report::{Diagnostics, MleReport, QueryReport, ReportEnvelope, SCHEMA_VERSION};

pub fn dispatch(cli: &Cli) -> CliResult<Output> {
    match &cli.command {
        Command::Mle(a) => commands::mle(a),
        Command::Gp(a) => commands::gp(a),
        Command::Entropy(a) => commands::entropy(a),
        Command::Bne(a) => commands::bne(a),
        Command::Simgen(a) => commands::simgen(a),
    }
}

/// Writes every output file, then prints the report if it goes to stdout.
pub fn commit(out: Output) -> CliResult<()> {
    for (path, bytes) in &out.files {
        io::write_atomic(path, bytes)?;
    }
    if let Some(text) = out.stdout {
        let mut stdout = std::io::stdout().lock();
        stdout
            .write_all(text.as_bytes())
            .and_then(|_| stdout.flush())
            .map_err(|e| CliError::io(std::path::Path::new("<stdout>"), e))?;
    }
    Ok(())
}

/// Parses arguments, runs, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli).and_then(commit) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
