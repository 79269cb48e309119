use std::process::ExitCode;

use clap::Parser;
use isacfeas_cli::{run, server, Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Serve { port, host } = &cli.command {
        return match serve(host, *port) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        };
    }
    let mut out = String::new();
    match run(&cli.command, &mut out) {
        Ok(outcome) => {
            print!("{out}");
            ExitCode::from(outcome.code())
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn serve(host: &str, port: u16) -> anyhow::Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port)).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, server::router()).await?;
        Ok(())
    })
}
