use std::process::ExitCode;

use clap::Parser;
use sshfp_audit_cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    ExitCode::from(run(cli) as u8)
}
