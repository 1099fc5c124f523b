use std::process::ExitCode;

use clap::Parser;
use dtrecon::experiment::{run, ExperimentConfig};

fn main() -> ExitCode {
    let config = ExperimentConfig::parse();
    let stdout = std::io::stdout();
    match run(&config, &mut stdout.lock()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("dtrecon: {e}");
            ExitCode::from(2)
        }
    }
}
