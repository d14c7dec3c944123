use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = nnms::cli::Cli::parse();
    match nnms::cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
