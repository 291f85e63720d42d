use std::process::ExitCode;

use clap::Parser;
use fracrule_cli::{run, Cli};

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors and 0 for --help/--version.
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fracrule: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
