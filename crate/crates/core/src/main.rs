use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let args = lietrans::cli::Cli::parse();
    match lietrans::cli::run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(lietrans::cli::exit_code(&e))
        }
    }
}
