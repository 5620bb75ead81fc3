use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use mdpcg_cli::{execute, Cli};

fn configure_threads() {
    let Ok(value) = std::env::var("MDPCG_THREADS") else {
        return;
    };
    match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: cannot size thread pool: {e}");
            }
        }
        _ => eprintln!("warning: ignoring MDPCG_THREADS={value:?}; expected a positive integer"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match execute(&cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("mdpcg: {err}");
            if let Some(payload) = err.payload() {
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&payload).unwrap_or_default());
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
