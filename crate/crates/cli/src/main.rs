use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use ergo_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(text) => {
            if let Some(text) = text {
                let _ = std::io::stdout().write_all(text.as_bytes());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ergo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
