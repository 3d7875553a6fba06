use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    // help and version print through clap directly
    if let Err(e) = stablelab_cli::app::Cli::try_parse_from(&args) {
        if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    }
    match stablelab_cli::app::run(&args) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("stablelab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
