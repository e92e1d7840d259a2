use std::process::ExitCode;

use clap::Parser;
use rqc_purity::cli::{run, write_outcome, Cli, CliError, THREADS_ENV};

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Core(rqc_purity::Error::Invalid(format!("{THREADS_ENV}={raw} is not a positive integer"))))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Io(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| run(&cli)).and_then(|outcome| {
        write_outcome(&outcome)?;
        eprintln!("{}", outcome.summary);
        if outcome.failures > 0 {
            Err(CliError::Acceptance(outcome.failures))
        } else {
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
