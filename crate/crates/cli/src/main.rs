mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Format};
use commands::{CliError, CmdResult, Output};

fn run(cli: &Cli) -> CmdResult<Output> {
    if cli.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    let fmt = |default| cli.format.unwrap_or(default);
    pool.install(|| match &cli.command {
        Command::Constants(a) => commands::constants(a, fmt(Format::Csv)),
        Command::Curve(a) => commands::curve(a, fmt(Format::Csv)),
        Command::Mean(a) => commands::mean(a, fmt(Format::Csv)),
        Command::Simulate(a) => commands::simulate(a, cli.seed, fmt(Format::Csv)),
        Command::Rate(a) => commands::rate(a, fmt(Format::Json)),
        Command::Clt(a) => commands::clt(a, cli.seed, fmt(Format::Json)),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let out = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &out.body),
        None => std::io::stdout().lock().write_all(&out.body),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(1);
    }
    if let Some(msg) = out.failure {
        eprintln!("error: {msg}");
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
