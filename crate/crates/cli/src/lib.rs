//! critflow: command-line surface over `critflow-core`.
//!
//! Subcommands map one-to-one onto the library's verification surfaces:
//! `bounds-rank1` and `bounds-higher-rank` print dimension bound
//! reports, `delta` estimates a critical exponent from a Schottky spec,
//! `flow` integrates the natural flow and checks volume contraction,
//! `ode-check` verifies the scalar comparison lemma, and `selftest`
//! replays the golden tables and seeded property suites.
//!
//! Exit codes: 0 success/pass, 1 selftest failure, 2 input error,
//! 3 estimation failure, 4 verification failure.

use clap::Parser;

pub mod commands;
pub mod presets;
pub mod provenance;
pub mod schema;

use critflow_core::Error;

/// Seed used when neither flag nor config file provides one.
pub const DEFAULT_SEED: u64 = 17;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SELFTEST: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_ESTIMATION: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

/// Exit code for a library error, per the documented code table.
/// Resource limits count as input errors: the fix is a flag change.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Input(_) | Error::Resource(_) => EXIT_INPUT,
        Error::Estimation(_) => EXIT_ESTIMATION,
        Error::Verification(_) => EXIT_VERIFICATION,
    }
}

#[derive(Parser)]
#[command(
    name = "critflow",
    version,
    about = "Spectral bound tables, critical exponent estimates, and flow contraction checks"
)]
struct Cli {
    #[command(subcommand)]
    command: commands::Command,
}

/// Parses arguments and runs one command, returning the process exit
/// code. Reports are printed to stdout (or `--output`); human-readable
/// errors go to stderr.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version through this path too.
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}
