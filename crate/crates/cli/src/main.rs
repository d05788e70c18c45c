//! `symbiosim` command-line front-end.

mod commands;
mod config;
mod error;
mod manifest;
mod plot;

use std::process::ExitCode;

use clap::Command;

use crate::commands::SUBCOMMANDS;
use crate::config::{command, Params};
use crate::error::CliError;

fn cli() -> Command {
    let mut c = Command::new("symbiosim")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Simulation and numerics for the symbiotic contact process")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for s in SUBCOMMANDS {
        c = c.subcommand(command(s.name, s.about, s.keys));
    }
    c
}

fn run() -> Result<(), CliError> {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return if code == 0 {
                Ok(())
            } else {
                Err(CliError {
                    code: 2,
                    message: String::new(),
                })
            };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let spec = SUBCOMMANDS
        .iter()
        .find(|s| s.name == name)
        .expect("registered subcommand");
    let params = Params::resolve(spec.keys, sub)?;
    (spec.run)(&params)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.message.is_empty() {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.code)
        }
    }
}
