use std::process::ExitCode;

use clap::Parser;
use e8kem_cli::{run, Cli, Entropy, SEED_ENV};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Entropy::from_env(std::env::var_os(SEED_ENV), cli.insecure_deterministic)
        .and_then(|entropy| run(cli, entropy, &mut std::io::stdout().lock()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("e8kem: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
