use std::io::Write;

use clap::Parser;
use minerec_cli::commands::{run, run_serve, Cli, Command};
use tracing_subscriber::EnvFilter;

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match cli.command {
        serve @ Command::Serve { .. } => tokio::runtime::Runtime::new()?.block_on(run_serve(serve)),
        other => {
            let out = run(other)?;
            std::io::stdout().write_all(out.as_bytes())?;
            Ok(())
        }
    }
}
