use std::process::ExitCode;

use clap::Parser;
use modcanvas_service::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli, &mut std::io::stdout()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(message) => {
            eprintln!("modcanvas: {message}");
            ExitCode::from(2)
        }
    }
}
