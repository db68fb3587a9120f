use std::io::Write;
use std::process::ExitCode;

use bqsdc_cli::{execute, Cli, Format};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &outcome.bytes).map(|_| {
            print!("{}", outcome.summary);
        }),
        None => {
            // a text report already is the summary
            if outcome.format != Format::Text {
                eprint!("{}", outcome.summary);
            }
            std::io::stdout().write_all(&outcome.bytes)
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(outcome.exit_code as u8)
}
