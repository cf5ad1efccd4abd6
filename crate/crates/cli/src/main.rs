use std::process::ExitCode;

use clap::Parser;
use gaussent_cli::{configure_threads, emit, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = std::env::var("GAUSSENT_THREADS").ok();
    let result = configure_threads(threads.as_deref())
        .and_then(|()| run(&cli))
        .and_then(|text| emit(&cli, &text));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
