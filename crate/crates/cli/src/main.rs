use std::process::ExitCode;

use clap::Parser;
use skosframe_cli::{run, Cli, EXIT_INTERNAL};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let code = std::panic::catch_unwind(|| run(&cli, &mut std::io::stdout(), &mut std::io::stderr())).unwrap_or(EXIT_INTERNAL);
    ExitCode::from(code)
}
