use std::process::ExitCode;

use sqrl_cli::{execute, parse_args, write_outputs, THREADS_ENV};

fn main() -> ExitCode {
    let config = match parse_args(std::env::args_os()) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };

    if let Ok(raw) = std::env::var(THREADS_ENV) {
        match raw.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            }
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer, got `{raw}`");
                return ExitCode::from(2);
            }
        }
    }

    match execute(&config).and_then(|ex| write_outputs(&config, &ex)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
