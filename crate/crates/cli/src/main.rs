mod commands;
mod failure;
mod io;
mod opts;
mod parse;

use std::process::ExitCode;

use clap::Parser;

use commands::Cli;
use failure::Failure;

fn threads(cli: &Cli) -> Result<Option<usize>, Failure> {
    if let Some(n) = cli.threads {
        return Ok(Some(n));
    }
    match std::env::var("EVTDYN_THREADS") {
        Ok(v) => parse::count(&v)
            .map(Some)
            .map_err(|e| Failure::Config(format!("EVTDYN_THREADS: {e}"))),
        Err(_) => Ok(None),
    }
}

fn main_inner() -> Result<(), Failure> {
    let args = parse::merge_config(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 6 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Some(n) = threads(&cli)?.filter(|&n| n > 0) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    }
    commands::run(cli)
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("evtdyn: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
