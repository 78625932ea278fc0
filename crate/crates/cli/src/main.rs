mod commands;
mod config;
mod error;
mod report;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, Command};
use error::Result;

fn run(cli: Cli) -> Result<()> {
    let (name, args) = match cli.command {
        Command::Compare(args) => return commands::compare(args),
        Command::Analyze(a) => ("analyze", a),
        Command::Simulate(a) => ("simulate", a),
        Command::Sweep(a) => ("sweep", a),
    };
    let params = args.resolve(name)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = params.jobs {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| error::CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match name {
        "analyze" => commands::analyze(&params),
        "simulate" => commands::simulate(&params),
        _ => commands::sweep(&params),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(3);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
