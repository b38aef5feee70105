use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = axcomp_cli::Cli::parse();
    match axcomp_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
