use clap::Parser;
use gapspec::cli::{resolve_config, run, Cli};
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env_jobs = std::env::var("GAPSPEC_JOBS").ok();
    let result = resolve_config(&cli, env_jobs.as_deref())
        .and_then(|cfg| run(&cli, &cfg, &mut std::io::stdout().lock()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gapspec: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
