use std::io::Write;
use std::process::ExitCode;

use aqo::cli::Cli;
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match aqo::commands::execute(&cli) {
        Ok(summary) => {
            let text = serde_json::to_string_pretty(&summary).expect("summaries serialize");
            // A closed stdout (e.g. piped into head) is not a failure of the run.
            let _ = writeln!(std::io::stdout(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
