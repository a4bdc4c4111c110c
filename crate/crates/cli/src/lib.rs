//! Argument parsing and dispatch for the `sleobs` binary.

pub mod args;
mod commands;

use std::ffi::OsString;
use std::fs;
use std::io::Write;

use clap::Parser;
use serde::Serialize;
use sleobs::mc::SCHEMA_VERSION;

use args::{Cli, Format, OutputArgs};

/// Exit code of a run whose check passed, or of a plain computation.
pub const EXIT_PASS: i32 = 0;
/// Exit code of a failed check or a runtime error.
pub const EXIT_FAIL: i32 = 1;
/// Exit code of a usage error: bad flags, malformed literals, unmet preconditions.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<sleobs::Error> for CliError {
    fn from(e: sleobs::Error) -> Self {
        use sleobs::Error::*;
        match e {
            Domain(_) | Config(_) | Parse(_) | Charge(_) | Singularity(_) => CliError::Usage(e.to_string()),
            Swallowed { .. } | InsufficientData(_) | Io(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("io error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(format!("json error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Whether a subcommand's check passed; plain computations report `Pass`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

/// Top-level JSON document: the echoed flags, the verdict and the result.
#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    schema: u32,
    command: &'a str,
    config: &'a C,
    #[serde(skip_serializing_if = "Option::is_none")]
    pass: Option<bool>,
    result: &'a R,
}

pub(crate) fn envelope<C: Serialize, R: Serialize>(
    command: &str,
    config: &C,
    pass: Option<bool>,
    result: &R,
) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(&Envelope { schema: SCHEMA_VERSION, command, config, pass, result })?;
    s.push('\n');
    Ok(s)
}

pub(crate) fn emit(out: &OutputArgs, stdout: &mut dyn Write, text: &str) -> CliResult<()> {
    match &out.out {
        Some(path) => fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

pub(crate) fn format_or(out: &OutputArgs, default: Format) -> Format {
    out.format.unwrap_or(default)
}

pub(crate) fn json_only(out: &OutputArgs, command: &str) -> CliResult<()> {
    match out.format {
        Some(Format::Csv) => Err(CliError::Usage(format!("{command} has no CSV output; use --format json"))),
        _ => Ok(()),
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                EXIT_USAGE
            } else {
                let _ = stdout.write_all(text.as_bytes());
                EXIT_PASS
            };
        }
    };
    match commands::execute(&cli.command, stdout) {
        Ok(Outcome::Pass) => EXIT_PASS,
        Ok(Outcome::Fail) => EXIT_FAIL,
        Err(CliError::Usage(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_USAGE
        }
        Err(CliError::Runtime(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_FAIL
        }
    }
}
