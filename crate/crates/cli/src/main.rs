use std::process::ExitCode;

use clap::Parser;
use homodiff_cli::{init_logging, run, Cli};

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("homodiff: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
