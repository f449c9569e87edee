//! Batch experiment runner behind the `quantprec` binary.

mod output;
mod run;
mod spec;

pub use output::{Cell, Table};
pub use run::{Artifacts, run, run_to_artifacts};
pub use spec::{
    Command, ConstellationSpec, Dims, ExperimentSpec, Format, Noise, PrecoderSpec, SweepRange, SweepVar,
};

use crate::error::Error;

/// Exit status: success.
pub const EXIT_OK: i32 = 0;
/// Exit status: bad flags or an infeasible configuration.
pub const EXIT_USAGE: i32 = 1;
/// Exit status: numerical failure during a run.
pub const EXIT_NUMERICAL: i32 = 2;

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_)
        | Error::InvalidConstellation(_)
        | Error::InvalidQuantizer(_)
        | Error::InvalidArgument(_)
        | Error::Parse(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

/// Parses `args` (including the program name), runs, and returns the exit
/// status. Diagnostics go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let (spec, threads) = match spec::parse_args(args) {
        Ok(v) => v,
        Err(spec::ParseOutcome::Display(msg)) => {
            print!("{msg}");
            return EXIT_OK;
        }
        Err(spec::ParseOutcome::Usage(msg)) => {
            eprint!("{msg}");
            return EXIT_USAGE;
        }
    };
    if let Some(t) = threads {
        // a second initialisation (tests, embedding) keeps the existing pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match run(&spec) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("quantprec: {e}");
            exit_code(&e)
        }
    }
}
