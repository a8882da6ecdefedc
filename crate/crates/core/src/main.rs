use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = mtrack::cli::Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level())
        .format_timestamp(None)
        .init();
    match mtrack::cli::execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
