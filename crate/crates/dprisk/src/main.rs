//! `dprisk`: privacy budgets in, disclosure risk bounds out.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on domain errors,
//! 3 when a request is well formed but infeasible.

mod args;
mod commands;
mod output;

use clap::error::ErrorKind;
use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = match args::Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap routes help and version to stdout, usage errors to stderr.
            let _ = err.print();
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // A reader that stopped consuming output (head, a closed pager)
            // is normal termination, not a failure worth reporting.
            if let Some(io_err) = err.downcast_ref::<std::io::Error>() {
                if io_err.kind() == std::io::ErrorKind::BrokenPipe {
                    return ExitCode::SUCCESS;
                }
            }
            eprintln!("error: {err:#}");
            let code = match err.downcast_ref::<dp_risk::Error>() {
                Some(dp_risk::Error::Infeasible(_)) => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}
