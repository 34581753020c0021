mod commands;
mod options;

use std::process::ExitCode;

use clap::Parser;
use logcontrast::{Error, SolverRegistry};

use options::{Cli, Command};

fn exit_code(err: &Error) -> u8 {
    match err.kind() {
        "usage" | "parameter" => 2,
        "io" => 3,
        "domain" | "simplex" | "shape" | "format" | "csv" | "json" => 4,
        "topology" => 5,
        "numerical" => 6,
        "tuning" => 7,
        _ => 1,
    }
}

fn report(kind: &str, message: &str, code: u8) -> ExitCode {
    let line = serde_json::json!({ "error": kind, "message": message, "exit_code": code });
    eprintln!("{line}");
    ExitCode::from(code)
}

fn threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("LOGCONTRAST_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .map_err(|_| Error::Usage(format!("LOGCONTRAST_THREADS = '{value}' is not a count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Error> {
    threads()?;
    let registry = SolverRegistry::builtin();
    match cli.command {
        Command::Gen(o) => commands::gen(&o.resolve()?),
        Command::Fit(o) => commands::fit(&o.resolve()?, &registry),
        Command::Tune(o) => commands::tune(&o.resolve()?, &registry),
        Command::Bench(o) => commands::bench(&o.resolve()?, &registry),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report("usage", e.to_string().trim(), 2),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            report(e.kind(), &e.to_string(), code)
        }
    }
}
