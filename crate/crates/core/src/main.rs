use std::process::ExitCode;

use clap::Parser;
use mimo_secrecy::cli::{run, Cli};

fn main() -> ExitCode {
    ExitCode::from(run(&Cli::parse()))
}
